use crate::scalar::Scalar;

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
/// `m` is row-major `n x n`. Returns `None` for a singular system.
pub fn solve_dense<S: Scalar>(mut m: Vec<S>, mut rhs: Vec<S>) -> Option<Vec<S>> {
    let n = rhs.len();
    assert_eq!(m.len(), n * n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| {
            m[a * n + col].abs().partial_cmp(&m[b * n + col].abs()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot * n + col].abs() <= S::min_positive_value() {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(pivot * n + j, col * n + j);
            }
            rhs.swap(pivot, col);
        }
        let p = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            if f == S::zero() {
                continue;
            }
            for j in col..n {
                m[row * n + j] = m[row * n + j] - f * m[col * n + j];
            }
            rhs[row] = rhs[row] - f * rhs[col];
        }
    }
    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in row + 1..n {
            acc = acc - m[row * n + j] * x[j];
        }
        x[row] = acc / m[row * n + row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // 2x + y = 5, x + 3y = 10  ->  x = 1, y = 3
        let x = solve_dense(vec![2.0, 1.0, 1.0, 3.0], vec![5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0f64).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_is_none() {
        assert!(solve_dense(vec![1.0f64, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
    }
}
