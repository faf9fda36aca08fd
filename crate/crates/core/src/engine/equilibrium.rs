//! Exact stationary distributions and detailed-balance checks.

use std::collections::HashMap;

use super::linalg::solve_dense;
use super::statespace::StateGraph;
use crate::model::{free_energy, ModelError, TileSystem};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("{} edge(s) lack a reverse reaction", .0.len())]
    Irreversible(Vec<usize>),
    #[error("state graph splits into {0} strongly connected components")]
    Disconnected(usize),
    #[error("state graph was truncated; the stationary law is not defined on a partial graph")]
    Truncated,
    #[error("generator matrix is singular")]
    Singular,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug)]
pub struct Stationary<S: Scalar = f64> {
    /// Solution of `pi Q = 0`, `sum pi = 1`.
    pub probabilities: Vec<S>,
    /// `exp(-G(A)) / Z` over the same states.
    pub boltzmann: Vec<S>,
}

impl<S: Scalar> Stationary<S> {
    /// Largest `|pi - p| / p` over states.
    pub fn max_relative_gap(&self) -> S {
        self.probabilities
            .iter()
            .zip(&self.boltzmann)
            .map(|(a, b)| ((*a - *b) / *b).abs())
            .fold(S::zero(), S::max)
    }
}

fn reach<S: Scalar>(g: &StateGraph<S>, forward: bool) -> Vec<bool> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.len()];
    for e in &g.edges {
        if forward {
            adj[e.from].push(e.to);
        } else {
            adj[e.to].push(e.from);
        }
    }
    let mut seen = vec![false; g.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(s) = stack.pop() {
        for &t in &adj[s] {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

fn components<S: Scalar>(g: &StateGraph<S>) -> usize {
    // undirected components are enough: every edge is reversible here
    let mut parent: Vec<usize> = (0..g.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for e in &g.edges {
        let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
        if a != b {
            parent[a] = b;
        }
    }
    (0..g.len()).filter(|&i| find(&mut parent, i) == i).count()
}

/// Log-weights `-G(A)` of every state.
pub fn log_weights<S: Scalar>(system: &TileSystem<S>, graph: &StateGraph<S>) -> Result<Vec<S>, ModelError> {
    graph.states.iter().map(|a| free_energy(system, a).map(|g| -g)).collect()
}

fn normalise<S: Scalar>(logw: &[S]) -> Vec<S> {
    let m = logw.iter().copied().fold(S::neg_infinity(), S::max);
    let w: Vec<S> = logw.iter().map(|l| (*l - m).exp()).collect();
    let z = w.iter().copied().fold(S::zero(), |a, b| a + b);
    w.into_iter().map(|x| x / z).collect()
}

/// Solves the global balance equations of the CTMC directly.
pub fn stationary_distribution<S: Scalar>(
    system: &TileSystem<S>,
    graph: &StateGraph<S>,
) -> Result<Stationary<S>, EquilibriumError> {
    if graph.truncated {
        return Err(EquilibriumError::Truncated);
    }
    let bad: Vec<usize> = (0..graph.edges.len()).filter(|&i| !graph.edges[i].has_reverse).collect();
    if !bad.is_empty() {
        return Err(EquilibriumError::Irreversible(bad));
    }
    let n = graph.len();
    if !reach(graph, true).iter().all(|&b| b) || !reach(graph, false).iter().all(|&b| b) {
        return Err(EquilibriumError::Disconnected(components(graph)));
    }
    // transpose of the generator, last row replaced by the normalisation
    let mut m = vec![S::zero(); n * n];
    for e in &graph.edges {
        m[e.to * n + e.from] = m[e.to * n + e.from] + e.rate;
        m[e.from * n + e.from] = m[e.from * n + e.from] - e.rate;
    }
    for j in 0..n {
        m[(n - 1) * n + j] = S::one();
    }
    let mut rhs = vec![S::zero(); n];
    rhs[n - 1] = S::one();
    let probabilities = solve_dense(m, rhs).ok_or(EquilibriumError::Singular)?;
    let boltzmann = normalise(&log_weights(system, graph)?);
    Ok(Stationary { probabilities, boltzmann })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceReport<S: Scalar = f64> {
    pub pass: bool,
    /// Worst `|1 - flux_back / flux_forward|` over edge pairs.
    pub max_violation: S,
    /// Edges without a reverse; non-empty means a structural failure.
    pub missing_reverse: Vec<usize>,
    pub pairs_checked: usize,
}

/// Relative tolerance used by [`check_detailed_balance`].
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// Checks `exp(-G(A)) k c_i = exp(-G(A')) k c_j` for every edge pair.
pub fn check_detailed_balance<S: Scalar>(
    system: &TileSystem<S>,
    graph: &StateGraph<S>,
) -> Result<BalanceReport<S>, ModelError> {
    let missing: Vec<usize> = (0..graph.edges.len()).filter(|&i| !graph.edges[i].has_reverse).collect();
    if !missing.is_empty() {
        return Ok(BalanceReport {
            pass: false,
            max_violation: S::infinity(),
            missing_reverse: missing,
            pairs_checked: 0,
        });
    }
    let logw = log_weights(system, graph)?;
    let mut rate: HashMap<(usize, usize), S> = HashMap::new();
    for e in &graph.edges {
        let r = rate.entry((e.from, e.to)).or_insert(S::zero());
        *r = *r + e.rate;
    }
    let mut worst = S::zero();
    let mut pairs = 0;
    for (&(a, b), &fwd) in &rate {
        if a > b {
            continue;
        }
        let back = rate[&(b, a)];
        let lf = logw[a] + fwd.ln();
        let lb = logw[b] + back.ln();
        worst = worst.max((S::one() - (lb - lf).exp()).abs());
        pairs += 1;
    }
    Ok(BalanceReport {
        pass: worst < S::of(BALANCE_TOLERANCE),
        max_violation: worst,
        missing_reverse: Vec::new(),
        pairs_checked: pairs,
    })
}
