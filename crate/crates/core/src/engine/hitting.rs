//! First-passage statistics over independent replicas.

use rayon::prelude::*;

use super::sim::{simulate_until, Record, SimConfig, SimError, Status};
use crate::model::{Assembly, TileSystem};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaHit<S: Scalar = f64> {
    pub seed: u64,
    /// `None` when the replica was censored by a limit or stalled.
    pub time: Option<S>,
    pub events: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitStatus {
    Ok,
    /// Every replica was censored.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HittingStats<S: Scalar = f64> {
    pub status: HitStatus,
    /// Mean over uncensored replicas.
    pub mean: S,
    pub stderr: S,
    pub mean_events: S,
    pub censored: usize,
    pub replicas: Vec<ReplicaHit<S>>,
}

impl<S: Scalar> HittingStats<S> {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.replicas.len().max(1) as f64
    }
}

/// Runs `replicas` independent simulations (seeds `config.seed + i`) and
/// records the first time `target` holds. Censored replicas are excluded
/// from the mean but reported.
pub fn hitting_time_stats<S, F>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    target: F,
    replicas: usize,
    config: &SimConfig<S>,
) -> Result<HittingStats<S>, SimError>
where
    S: Scalar,
    F: Fn(&Assembly) -> bool + Sync,
{
    let runs: Result<Vec<ReplicaHit<S>>, SimError> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig {
                seed: config.seed.wrapping_add(i as u64),
                audit_every: 0,
                record: Record::FinalOnly,
                ..config.clone()
            };
            let t = simulate_until(system, assembly, &cfg, &target)?;
            Ok(ReplicaHit {
                seed: cfg.seed,
                time: (t.status == Status::Target).then_some(t.time),
                events: t.event_count,
            })
        })
        .collect();
    let runs = runs?;
    let hits: Vec<(S, u64)> = runs.iter().filter_map(|r| r.time.map(|t| (t, r.events))).collect();
    let censored = runs.len() - hits.len();
    if hits.is_empty() {
        return Ok(HittingStats {
            status: HitStatus::Inconclusive,
            mean: S::nan(),
            stderr: S::nan(),
            mean_events: S::nan(),
            censored,
            replicas: runs,
        });
    }
    let n = S::of(hits.len() as f64);
    let mean = hits.iter().fold(S::zero(), |a, h| a + h.0) / n;
    let mean_events = hits.iter().fold(S::zero(), |a, h| a + S::of(h.1 as f64)) / n;
    let var = if hits.len() > 1 {
        hits.iter().fold(S::zero(), |a, h| a + (h.0 - mean) * (h.0 - mean)) / (n - S::one())
    } else {
        S::zero()
    };
    Ok(HittingStats {
        status: HitStatus::Ok,
        mean,
        stderr: (var / n).sqrt(),
        mean_events,
        censored,
        replicas: runs,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
