use super::rule::{BlockRule1D, Symbol};
use super::BlockcaError;

/// Boundary conditions for a 1D block automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Boundary1D {
    /// Ring of even length; step `t` pairs cells `(2k, 2k+1)` when `t` is
    /// even and `(2k+1, 2k+2)` (wrapping) when `t` is odd.
    Periodic,
    /// Expanding array fed from both ends: before step `t` completes, one cell
    /// `left[t]` is prepended and one cell `right[t]` appended. Prepending one
    /// cell per step is what alternates the partition parity relative to a
    /// fixed spatial frame.
    Streams { left: Vec<Symbol>, right: Vec<Symbol> },
}

/// History of `steps + 1` rows, row 0 being `initial`.
pub fn run_bca1d(
    rule: &BlockRule1D,
    initial: &[Symbol],
    steps: usize,
    boundary: &Boundary1D,
) -> Result<Vec<Vec<Symbol>>, BlockcaError> {
    let n = rule.alphabet();
    if let Some(&v) = initial.iter().find(|&&v| v as usize >= n) {
        return Err(BlockcaError::SymbolOutOfRange { symbol: v, alphabet: n });
    }
    if initial.len() % 2 != 0 {
        return Err(BlockcaError::OddLength(initial.len()));
    }
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(initial.to_vec());
    match boundary {
        Boundary1D::Periodic => {
            let len = initial.len();
            for t in 0..steps {
                let cur = &rows[t];
                let mut next = cur.clone();
                let offset = t % 2;
                for k in 0..len / 2 {
                    let i = (2 * k + offset) % len;
                    let j = (2 * k + offset + 1) % len;
                    let (f, g) = rule.apply(cur[i], cur[j]);
                    next[i] = f;
                    next[j] = g;
                }
                rows.push(next);
            }
        }
        Boundary1D::Streams { left, right } => {
            if left.len() < steps || right.len() < steps {
                return Err(BlockcaError::ShortStream {
                    needed: steps,
                    left: left.len(),
                    right: right.len(),
                });
            }
            if let Some(&v) = left[..steps].iter().chain(&right[..steps]).find(|&&v| v as usize >= n)
            {
                return Err(BlockcaError::SymbolOutOfRange { symbol: v, alphabet: n });
            }
            for t in 0..steps {
                let cur = &rows[t];
                let mut next = Vec::with_capacity(cur.len() + 2);
                next.push(left[t]);
                for pair in cur.chunks_exact(2) {
                    let (f, g) = rule.apply(pair[0], pair[1]);
                    next.push(f);
                    next.push(g);
                }
                next.push(right[t]);
                rows.push(next);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_pairs_wrap_on_odd_steps() {
        let swap = BlockRule1D::from_fn(3, |x, y| (y, x)).unwrap();
        let h = run_bca1d(&swap, &[0, 1, 2, 0], 2, &Boundary1D::Periodic).unwrap();
        assert_eq!(h[1], vec![1, 0, 0, 2]);
        assert_eq!(h[2], vec![2, 0, 0, 1]);
    }

    #[test]
    fn streams_grow_by_two() {
        let h = run_bca1d(
            &BlockRule1D::xor(),
            &[],
            3,
            &Boundary1D::Streams { left: vec![1, 0, 0], right: vec![0, 0, 0] },
        )
        .unwrap();
        assert_eq!(h[1], vec![1, 0]);
        assert_eq!(h[2], vec![0, 1, 1, 0]);
        assert_eq!(h[3], vec![0, 1, 1, 1, 1, 0]);
    }

    #[test]
    fn odd_ring_is_rejected() {
        let r = BlockRule1D::xor();
        assert!(matches!(
            run_bca1d(&r, &[0, 1, 0], 1, &Boundary1D::Periodic),
            Err(BlockcaError::OddLength(3))
        ));
    }
}
