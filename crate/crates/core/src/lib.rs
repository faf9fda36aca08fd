//! Single-assembly tile displacement: the model, its stochastic and exact
//! analysis, reference block automata, and compilers from wires, circuits
//! and block automata to tile sets.

pub mod blockca;
pub mod compilers;
pub mod engine;
pub mod model;
pub mod scalar;

pub use scalar::Scalar;

pub type TileSystemF64 = model::TileSystem<f64>;
pub type TileSystemF32 = model::TileSystem<f32>;
pub type ConstructionF64 = compilers::Construction<f64>;
pub type ConstructionF32 = compilers::Construction<f32>;
pub type TrajectoryF64 = engine::Trajectory<f64>;
pub type TrajectoryF32 = engine::Trajectory<f32>;
pub type ReactionF64 = model::Reaction<f64>;
pub type ReactionF32 = model::Reaction<f32>;
