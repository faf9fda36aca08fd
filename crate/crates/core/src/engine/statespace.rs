//! Reachable state space of the displacement CTMC.

use std::collections::{HashMap, VecDeque};

use crate::model::{enumerate_reactions, Assembly, Pos, TileId, TileSystem};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<S: Scalar = f64> {
    pub from: usize,
    pub to: usize,
    pub pos: Pos,
    pub invader: TileId,
    pub displaced: TileId,
    /// `k * c_invader`
    pub rate: S,
    pub delta_e: S,
    pub has_reverse: bool,
}

/// States are deduplicated by their row-major tile contents.
#[derive(Clone, Debug)]
pub struct StateGraph<S: Scalar = f64> {
    pub states: Vec<Assembly>,
    pub edges: Vec<Edge<S>>,
    /// Set when the cap stopped the search before closure.
    pub truncated: bool,
    index: HashMap<Vec<TileId>, usize>,
}

impl<S: Scalar> StateGraph<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, a: &Assembly) -> Option<usize> {
        self.index.get(a.cells()).copied()
    }

    pub fn all_reversible(&self) -> bool {
        self.edges.iter().all(|e| e.has_reverse)
    }

    /// Edges leaving a state.
    pub fn out_edges(&self, state: usize) -> impl Iterator<Item = &Edge<S>> + '_ {
        self.edges.iter().filter(move |e| e.from == state)
    }
}

/// Breadth-first closure of `start` under valid displacements, stopping
/// after `cap` states have been discovered.
pub fn enumerate_state_space<S: Scalar>(
    system: &TileSystem<S>,
    start: &Assembly,
    cap: usize,
) -> StateGraph<S> {
    let cap = cap.max(1);
    let mut states = vec![start.clone()];
    let mut index = HashMap::new();
    index.insert(start.cells().to_vec(), 0usize);
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut truncated = false;
    while let Some(s) = queue.pop_front() {
        let a = states[s].clone();
        for r in enumerate_reactions(system, &a) {
            let mut next = a.clone();
            next.set(r.pos, r.invader);
            let to = match index.get(next.cells()) {
                Some(&t) => t,
                None => {
                    if states.len() >= cap {
                        truncated = true;
                        continue;
                    }
                    let t = states.len();
                    index.insert(next.cells().to_vec(), t);
                    states.push(next);
                    queue.push_back(t);
                    t
                }
            };
            edges.push(Edge {
                from: s,
                to,
                pos: r.pos,
                invader: r.invader,
                displaced: r.displaced,
                rate: r.propensity,
                delta_e: r.delta_e,
                has_reverse: false,
            });
        }
    }
    let keys: std::collections::HashSet<(usize, usize, Pos)> =
        edges.iter().map(|e| (e.from, e.to, e.pos)).collect();
    for e in &mut edges {
        e.has_reverse = keys.contains(&(e.to, e.from, e.pos));
    }
    StateGraph { states, edges, truncated, index }
}
