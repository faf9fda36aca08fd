//! Numeric abstraction shared by the model, the kinetics and the linear solves.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type used for bond strengths, concentrations, rates and energies.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; used for constants and random variates.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for comparing sums of a handful of strengths.
    fn sum_tolerance(magnitude: Self) -> Self {
        Self::epsilon() * Self::of(16.0) * (Self::one() + magnitude.abs())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
