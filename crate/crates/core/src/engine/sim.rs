//! Exact stochastic simulation (direct method) with chemostatted monomers.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    bond_energy, enumerate_reactions, for_each_outcome, validate_displacement, Assembly, Dir,
    ModelError, Pos, Reaction, TileId, TileSystem, Validity, Warning,
};
use crate::scalar::Scalar;

/// Name of the generator recorded in trajectory metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// What a run keeps besides the final state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Record {
    Events,
    /// Event log plus an assembly snapshot every K events.
    SnapshotsEvery(u64),
    FinalOnly,
}

#[derive(Clone, Debug)]
pub struct SimConfig<S: Scalar = f64> {
    pub seed: u64,
    pub max_events: Option<u64>,
    pub max_time: Option<S>,
    /// Warning audit interval in events; 0 disables auditing.
    pub audit_every: u64,
    pub record: Record,
    /// Cross-check the incremental propensities against a full
    /// re-enumeration after every event (slow).
    pub verify_incremental: bool,
}

impl<S: Scalar> SimConfig<S> {
    pub fn events(seed: u64, max_events: u64) -> Self {
        SimConfig {
            seed,
            max_events: Some(max_events),
            max_time: None,
            audit_every: 0,
            record: Record::Events,
            verify_incremental: false,
        }
    }

    pub fn with_audit(mut self, every: u64) -> Self {
        self.audit_every = every;
        self
    }

    pub fn with_record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    pub fn with_max_time(mut self, t: S) -> Self {
        self.max_time = Some(t);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.max_events.is_none() && self.max_time.is_none() {
            return Err(SimError::Unbounded);
        }
        if let Some(t) = self.max_time {
            if !(t >= S::zero()) {
                return Err(SimError::Unbounded);
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("at least one of max_events / max_time must be finite")]
    Unbounded,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("incremental propensities diverged from full enumeration after event {0}")]
    Divergence(u64),
    #[error("event {0} does not replay: {1}")]
    Replay(u64, ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// No reaction is available.
    Stalled,
    EventLimit,
    TimeLimit,
    /// A caller-supplied target predicate became true.
    Target,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Stalled => "stalled",
            Status::EventLimit | Status::TimeLimit => "limit",
            Status::Target => "target",
        }
    }
}

/// One executed displacement.
#[derive(Clone, Debug, PartialEq)]
pub struct Event<S: Scalar = f64> {
    pub index: u64,
    pub time: S,
    pub pos: Pos,
    pub invader: TileId,
    pub displaced: TileId,
    pub delta_e: S,
}

#[derive(Clone, Debug)]
pub struct Trajectory<S: Scalar = f64> {
    pub seed: u64,
    pub rng: &'static str,
    pub initial: Assembly,
    pub events: Vec<Event<S>>,
    /// `(event count, time, assembly)`
    pub snapshots: Vec<(u64, S, Assembly)>,
    pub final_assembly: Assembly,
    pub warnings: Vec<Warning>,
    /// Bond energy after each recorded event; entry 0 is the initial energy.
    pub energy: Vec<S>,
    pub status: Status,
    pub event_count: u64,
    pub time: S,
}

impl<S: Scalar> Trajectory<S> {
    /// Re-executes the event log from the initial assembly, validating
    /// each step.
    pub fn replay(&self, system: &TileSystem<S>) -> Result<Assembly, SimError> {
        let mut a = self.initial.clone();
        for e in &self.events {
            step_checked(system, &mut a, e)?;
        }
        Ok(a)
    }

    /// Undoes the event log from the final assembly, validating each
    /// reverse step.
    pub fn replay_backward(&self, system: &TileSystem<S>) -> Result<Assembly, SimError> {
        let mut a = self.final_assembly.clone();
        for e in self.events.iter().rev() {
            let back = Event { invader: e.displaced, displaced: e.invader, ..e.clone() };
            step_checked(system, &mut a, &back)?;
        }
        Ok(a)
    }
}

fn step_checked<S: Scalar>(system: &TileSystem<S>, a: &mut Assembly, e: &Event<S>) -> Result<(), SimError> {
    if a.try_get(e.pos).map_err(|m| SimError::Replay(e.index, m))? != e.displaced {
        return Err(SimError::Replay(e.index, ModelError::StaleReaction(e.pos)));
    }
    match validate_displacement(system, a, e.pos, e.invader) {
        Ok(Validity::Valid(_)) => {
            a.set(e.pos, e.invader);
            Ok(())
        }
        Ok(Validity::Invalid(_)) => Err(SimError::Replay(e.index, ModelError::StaleReaction(e.pos))),
        Err(m) => Err(SimError::Replay(e.index, m)),
    }
}

/// Sum tree over per-cell total propensities. Interior nodes are always
/// recomputed from their children so no rounding drift accumulates.
#[derive(Clone, Debug)]
struct SumTree<S: Scalar> {
    leaves: usize,
    nodes: Vec<S>,
}

impl<S: Scalar> SumTree<S> {
    fn new(n: usize) -> Self {
        let leaves = n.next_power_of_two().max(1);
        SumTree { leaves, nodes: vec![S::zero(); 2 * leaves] }
    }

    fn set(&mut self, i: usize, v: S) {
        let mut k = self.leaves + i;
        self.nodes[k] = v;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    fn total(&self) -> S {
        self.nodes[1]
    }

    /// Leaf whose cumulative interval contains `target`.
    fn find(&self, mut target: S) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if target < left || self.nodes[2 * k + 1] <= S::zero() {
                k *= 2;
            } else {
                target = target - left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate<S: Scalar> {
    invader: TileId,
    propensity: S,
}

/// Incrementally maintained simulation state. After each event only the
/// 3x3 neighbourhood of the changed cell is re-derived.
pub struct Simulator<'a, S: Scalar = f64> {
    system: &'a TileSystem<S>,
    assembly: Assembly,
    cells: Vec<Vec<Candidate<S>>>,
    warnings: Vec<Vec<Warning>>,
    tree: SumTree<S>,
    rng: ChaCha8Rng,
    time: S,
    events: u64,
    energy: S,
    audit: bool,
}

impl<'a, S: Scalar> Simulator<'a, S> {
    pub fn new(system: &'a TileSystem<S>, assembly: Assembly, seed: u64, audit: bool) -> Result<Self, SimError> {
        assembly.check_against(system)?;
        let n = assembly.len();
        let energy = bond_energy(system, &assembly);
        let mut sim = Simulator {
            system,
            assembly,
            cells: vec![Vec::new(); n],
            warnings: vec![Vec::new(); n],
            tree: SumTree::new(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
            time: S::zero(),
            events: 0,
            energy,
            audit,
        };
        for i in 0..n {
            sim.refresh(i);
        }
        Ok(sim)
    }

    fn refresh(&mut self, i: usize) {
        let pos = self.assembly.pos_of(i);
        let mut w = std::mem::take(&mut self.warnings[i]);
        w.clear();
        let mut list = std::mem::take(&mut self.cells[i]);
        list.clear();
        let mut sum = S::zero();
        let system = self.system;
        for_each_outcome(system, &self.assembly, pos, if self.audit { Some(&mut w) } else { None }, |inv, _| {
            let propensity = system.rate(inv);
            sum = sum + propensity;
            list.push(Candidate { invader: inv, propensity });
        });
        self.warnings[i] = w;
        self.cells[i] = list;
        self.tree.set(i, sum);
    }

    pub fn assembly(&self) -> &Assembly {
        &self.assembly
    }

    pub fn time(&self) -> S {
        self.time
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn bond_energy(&self) -> S {
        self.energy
    }

    pub fn total_propensity(&self) -> S {
        self.tree.total()
    }

    /// Currently available reactions, in canonical order.
    pub fn reactions(&self) -> Vec<Reaction<S>> {
        enumerate_reactions(self.system, &self.assembly)
    }

    /// The maintained warning set.
    pub fn current_warnings(&self) -> impl Iterator<Item = &Warning> + '_ {
        self.warnings.iter().flatten()
    }

    /// Waiting time and event of the next reaction, without applying it.
    fn sample(&mut self) -> Option<(S, usize, TileId, S)> {
        let total = self.tree.total();
        if !(total > S::zero()) {
            return None;
        }
        let u: f64 = 1.0 - self.rng.gen::<f64>();
        let dt = -S::of(u.ln()) / total;
        let target = S::of(self.rng.gen::<f64>()) * total;
        let cell = self.tree.find(target);
        let list = &self.cells[cell];
        // offset of `target` inside this cell's interval
        let mut left = target - self.prefix_before(cell);
        let mut chosen = list.len() - 1;
        for (j, c) in list.iter().enumerate() {
            if left < c.propensity {
                chosen = j;
                break;
            }
            left = left - c.propensity;
        }
        Some((dt, cell, list[chosen].invader, list[chosen].propensity))
    }

    fn prefix_before(&self, leaf: usize) -> S {
        let mut k = self.tree.leaves + leaf;
        let mut acc = S::zero();
        while k > 1 {
            if k % 2 == 1 {
                acc = acc + self.tree.nodes[k - 1];
            }
            k /= 2;
        }
        acc
    }

    /// Executes one event. Returns `None` when stalled, or when the next
    /// event would occur after `horizon` (time is then advanced to it).
    pub fn step(&mut self, horizon: Option<S>) -> Option<Event<S>> {
        let (dt, cell, invader, _) = self.sample()?;
        if let Some(h) = horizon {
            if self.time + dt > h {
                self.time = h;
                return None;
            }
        }
        let pos = self.assembly.pos_of(cell);
        let displaced = self.assembly.get(pos);
        let ev = crate::model::evaluate(self.system, &self.assembly, pos, invader);
        let delta_e = ev.broken - ev.formed;
        self.assembly.set(pos, invader);
        self.time = self.time + dt;
        self.energy = self.energy + delta_e;
        let event = Event { index: self.events, time: self.time, pos, invader, displaced, delta_e };
        self.events += 1;
        // Outcomes at a cell depend only on the cell and its four neighbours.
        self.refresh(cell);
        for d in Dir::ALL {
            if let Some(n) = self.assembly.neighbor(pos, d) {
                let i = self.assembly.index_of(n);
                self.refresh(i);
            }
        }
        Some(event)
    }

    /// Compares maintained candidates with a full enumeration.
    pub fn consistent(&self) -> bool {
        let full = enumerate_reactions(self.system, &self.assembly);
        let mut it = full.iter();
        for (i, list) in self.cells.iter().enumerate() {
            let pos = self.assembly.pos_of(i);
            for c in list {
                match it.next() {
                    Some(r) if r.pos == pos && r.invader == c.invader => {}
                    _ => return false,
                }
            }
        }
        it.next().is_none()
            && (self.energy - bond_energy(self.system, &self.assembly)).abs()
                <= S::sum_tolerance(self.energy)
    }

    pub fn into_assembly(self) -> Assembly {
        self.assembly
    }
}

/// Runs the direct-method SSA until stalled or a limit is reached.
pub fn simulate<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    config: &SimConfig<S>,
) -> Result<Trajectory<S>, SimError> {
    simulate_until(system, assembly, config, |_| false)
}

/// As [`simulate`], additionally stopping as soon as `target` holds.
pub fn simulate_until<S: Scalar, F: FnMut(&Assembly) -> bool>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    config: &SimConfig<S>,
    mut target: F,
) -> Result<Trajectory<S>, SimError> {
    config.validate()?;
    let audit = config.audit_every > 0;
    let mut sim = Simulator::new(system, assembly.clone(), config.seed, audit)?;
    let keep_events = !matches!(config.record, Record::FinalOnly);
    let mut events = Vec::new();
    let mut snapshots = Vec::new();
    let mut energy = vec![sim.bond_energy()];
    let mut warnings = Vec::new();
    let mut seen: HashSet<(Pos, TileId, TileId)> = HashSet::new();
    let audit_now = |sim: &Simulator<'_, S>, warnings: &mut Vec<Warning>, seen: &mut HashSet<_>| {
        let mut present = HashSet::new();
        for w in sim.current_warnings() {
            let key = (w.pos, w.invader, w.displaced);
            if !seen.contains(&key) {
                let mut w = w.clone();
                w.event = Some(sim.event_count());
                warnings.push(w);
            }
            present.insert(key);
        }
        *seen = present;
    };
    if audit {
        audit_now(&sim, &mut warnings, &mut seen);
    }
    if let Record::SnapshotsEvery(_) = config.record {
        snapshots.push((0, S::zero(), sim.assembly().clone()));
    }
    let status = loop {
        if target(sim.assembly()) {
            break Status::Target;
        }
        if let Some(m) = config.max_events {
            if sim.event_count() >= m {
                break Status::EventLimit;
            }
        }
        let Some(ev) = sim.step(config.max_time) else {
            break if config.max_time.is_some_and(|h| sim.time() >= h) && sim.total_propensity() > S::zero() {
                Status::TimeLimit
            } else {
                Status::Stalled
            };
        };
        if config.verify_incremental && !sim.consistent() {
            return Err(SimError::Divergence(ev.index));
        }
        if keep_events {
            energy.push(sim.bond_energy());
            events.push(ev);
        }
        if audit && sim.event_count() % config.audit_every == 0 {
            audit_now(&sim, &mut warnings, &mut seen);
        }
        if let Record::SnapshotsEvery(k) = config.record {
            if k > 0 && sim.event_count() % k == 0 {
                snapshots.push((sim.event_count(), sim.time(), sim.assembly().clone()));
            }
        }
    };
    let event_count = sim.event_count();
    let time = sim.time();
    Ok(Trajectory {
        seed: config.seed,
        rng: RNG_ALGORITHM,
        initial: assembly.clone(),
        events,
        snapshots,
        final_assembly: sim.into_assembly(),
        warnings,
        energy,
        status,
        event_count,
        time,
    })
}
