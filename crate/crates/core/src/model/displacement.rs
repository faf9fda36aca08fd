//! Toehold status, energies, the valid-displacement predicate and the
//! unreliability audit.

use std::fmt;

use super::assembly::Assembly;
use super::geometry::{Dir, Pos, Slot, SlotRef};
use super::system::{Label, TileId, TileSystem};
use super::ModelError;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToeholdStatus {
    Closed(Label),
    Open,
}

/// A toehold that is bonded after (formed) or before (broken) a displacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotBond {
    pub slot: SlotRef,
    pub label: Label,
}

/// One valid displacement `A + invader -> A' + displaced`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reaction<S: Scalar = f64> {
    pub pos: Pos,
    pub invader: TileId,
    pub displaced: TileId,
    pub formed: Vec<SlotBond>,
    pub broken: Vec<SlotBond>,
    /// Change of bond energy, never positive.
    pub delta_e: S,
    /// `k * c_invader`.
    pub propensity: S,
}

impl<S: Scalar> Reaction<S> {
    /// Whether `other` describes the same transition (ignores derived fields).
    pub fn same_transition(&self, other: &Reaction<S>) -> bool {
        self.pos == other.pos && self.invader == other.invader && self.displaced == other.displaced
    }
}

/// Why a candidate displacement is rejected.
#[derive(Clone, Debug, PartialEq)]
pub enum Failure<S: Scalar = f64> {
    SelfDisplacement,
    /// No new non-inert bond forms on an open toehold of this side.
    Unmediated(Dir),
    /// The bond energy would increase by this amount.
    EnergyIncrease(S),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Validity<S: Scalar = f64> {
    Valid(Reaction<S>),
    Invalid(Vec<Failure<S>>),
}

impl<S: Scalar> Validity<S> {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid(_))
    }

    pub fn reaction(self) -> Option<Reaction<S>> {
        match self {
            Validity::Valid(r) => Some(r),
            Validity::Invalid(_) => None,
        }
    }
}

/// Energetically allowed replacement that lacks mediation on some side.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Warning {
    pub pos: Pos,
    pub invader: TileId,
    pub displaced: TileId,
    /// Neighbour sides on which no new toehold would form.
    pub unmediated: Vec<Dir>,
    /// Event index at which the audit saw it, when taken during a run.
    pub event: Option<u64>,
}

impl Warning {
    /// Classification used when counting distinct kinds of unreliable
    /// replacement: which tile would replace which.
    pub fn kind(&self) -> (TileId, TileId) {
        (self.displaced, self.invader)
    }

    pub fn describe<S: Scalar>(&self, system: &TileSystem<S>) -> String {
        let sides: String = self.unmediated.iter().map(|d| d.letter()).collect();
        format!(
            "warning missing-mediation at {} {} -> {} sides {}",
            self.pos,
            system.name(self.displaced),
            system.name(self.invader),
            sides
        )
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing-mediation at {}", self.pos)
    }
}

fn bonded(a: Label, b: Label) -> bool {
    !a.is_inert() && a == b
}

pub fn toehold_status<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    slot: SlotRef,
) -> Result<ToeholdStatus, ModelError> {
    let here = assembly.try_get(slot.pos)?;
    let label = system.tile(here).label(slot.dir, slot.slot);
    let Some(npos) = assembly.neighbor(slot.pos, slot.dir) else {
        return Ok(ToeholdStatus::Open);
    };
    let other = system.tile(assembly.get(npos)).label(slot.dir.opposite(), slot.slot);
    Ok(if bonded(label, other) { ToeholdStatus::Closed(label) } else { ToeholdStatus::Open })
}

/// Sum of `-E_b` over closed toehold pairs, each pair counted once.
pub fn bond_energy<S: Scalar>(system: &TileSystem<S>, assembly: &Assembly) -> S {
    let mut total = S::zero();
    for pos in assembly.positions() {
        let t = system.tile(assembly.get(pos));
        for dir in [Dir::E, Dir::N] {
            if let Some(n) = assembly.neighbor(pos, dir) {
                let u = system.tile(assembly.get(n));
                for s in Slot::BOTH {
                    let l = t.label(dir, s);
                    if bonded(l, u.label(dir.opposite(), s)) {
                        total = total - system.strength(l);
                    }
                }
            }
        }
    }
    total
}

/// Number of closed toehold pairs (unweighted).
pub fn closed_toehold_count<S: Scalar>(system: &TileSystem<S>, assembly: &Assembly) -> usize {
    let mut total = 0;
    for pos in assembly.positions() {
        let t = system.tile(assembly.get(pos));
        for dir in [Dir::E, Dir::N] {
            if let Some(n) = assembly.neighbor(pos, dir) {
                let u = system.tile(assembly.get(n));
                total += Slot::BOTH
                    .iter()
                    .filter(|&&s| bonded(t.label(dir, s), u.label(dir.opposite(), s)))
                    .count();
            }
        }
    }
    total
}

/// `G(A) = E(A) - sum ln(c_i / c0)` over all tiles of the assembly.
pub fn free_energy<S: Scalar>(system: &TileSystem<S>, assembly: &Assembly) -> Result<S, ModelError> {
    let mut chem = S::zero();
    for &t in assembly.cells() {
        let c = system.concentration(t);
        if !(c > S::zero()) {
            return Err(ModelError::UndefinedChemicalPotential(system.name(t).to_string()));
        }
        chem = chem + (c / system.c0()).ln();
    }
    Ok(bond_energy(system, assembly) - chem)
}

/// Allocation-free summary of replacing the tile at a position.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Evaluation<S: Scalar> {
    pub neighbors: u8,
    pub mediated: u8,
    pub formed: S,
    pub broken: S,
}

impl<S: Scalar> Evaluation<S> {
    pub fn energy_ok(&self) -> bool {
        self.broken - self.formed <= S::sum_tolerance(self.broken + self.formed)
    }

    pub fn fully_mediated(&self) -> bool {
        self.mediated == self.neighbors
    }

    pub fn unmediated(&self) -> Vec<Dir> {
        Dir::ALL
            .into_iter()
            .filter(|d| {
                let bit = 1 << d.index();
                self.neighbors & bit != 0 && self.mediated & bit == 0
            })
            .collect()
    }
}

pub(crate) fn evaluate<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    pos: Pos,
    invader: TileId,
) -> Evaluation<S> {
    let old = system.tile(assembly.get(pos));
    let new = system.tile(invader);
    let mut ev = Evaluation { neighbors: 0, mediated: 0, formed: S::zero(), broken: S::zero() };
    for dir in Dir::ALL {
        let Some(npos) = assembly.neighbor(pos, dir) else { continue };
        ev.neighbors |= 1 << dir.index();
        let nb = system.tile(assembly.get(npos)).side(dir.opposite());
        let os = old.side(dir);
        let ns = new.side(dir);
        for s in 0..2 {
            let was = bonded(os[s], nb[s]);
            let now = bonded(ns[s], nb[s]);
            if now && !was {
                ev.mediated |= 1 << dir.index();
                ev.formed = ev.formed + system.strength(ns[s]);
            } else if was && !now {
                ev.broken = ev.broken + system.strength(os[s]);
            }
        }
    }
    ev
}

fn bond_lists<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    pos: Pos,
    invader: TileId,
) -> (Vec<SlotBond>, Vec<SlotBond>) {
    let old = system.tile(assembly.get(pos));
    let new = system.tile(invader);
    let mut formed = Vec::new();
    let mut broken = Vec::new();
    for dir in Dir::ALL {
        let Some(npos) = assembly.neighbor(pos, dir) else { continue };
        let nb = system.tile(assembly.get(npos)).side(dir.opposite());
        for slot in Slot::BOTH {
            let s = slot.index();
            let was = bonded(old.side(dir)[s], nb[s]);
            let now = bonded(new.side(dir)[s], nb[s]);
            let at = SlotRef { pos, dir, slot };
            if now && !was {
                formed.push(SlotBond { slot: at, label: nb[s] });
            } else if was && !now {
                broken.push(SlotBond { slot: at, label: nb[s] });
            }
        }
    }
    (formed, broken)
}

pub(crate) fn build_reaction<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    pos: Pos,
    invader: TileId,
    ev: &Evaluation<S>,
) -> Reaction<S> {
    let (formed, broken) = bond_lists(system, assembly, pos, invader);
    Reaction {
        pos,
        invader,
        displaced: assembly.get(pos),
        formed,
        broken,
        delta_e: ev.broken - ev.formed,
        propensity: system.rate(invader),
    }
}

/// Checks both clauses of a valid displacement: mediation on every
/// neighbouring side and a non-increasing bond energy.
pub fn validate_displacement<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    pos: Pos,
    invader: TileId,
) -> Result<Validity<S>, ModelError> {
    let displaced = assembly.try_get(pos)?;
    if invader.index() >= system.tile_count() {
        return Err(ModelError::ForeignTile(invader.index()));
    }
    if invader == displaced {
        return Ok(Validity::Invalid(vec![Failure::SelfDisplacement]));
    }
    let ev = evaluate(system, assembly, pos, invader);
    let mut failures: Vec<Failure<S>> = ev.unmediated().into_iter().map(Failure::Unmediated).collect();
    if !ev.energy_ok() {
        failures.push(Failure::EnergyIncrease(ev.broken - ev.formed));
    }
    if failures.is_empty() {
        Ok(Validity::Valid(build_reaction(system, assembly, pos, invader, &ev)))
    } else {
        Ok(Validity::Invalid(failures))
    }
}

/// Same as [`validate_displacement`] with the invader given by name.
pub fn validate_named<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    pos: Pos,
    invader: &str,
) -> Result<Validity<S>, ModelError> {
    validate_displacement(system, assembly, pos, system.require_tile(invader)?)
}

/// Valid reactions and warnings available at one cell, in tile-name order.
pub(crate) fn cell_outcomes<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    pos: Pos,
    reactions: &mut Vec<Reaction<S>>,
    warnings: Option<&mut Vec<Warning>>,
) {
    for_each_outcome(system, assembly, pos, warnings, |inv, ev| {
        reactions.push(build_reaction(system, assembly, pos, inv, ev));
    });
}

/// Calls `valid` for every valid invader at `pos`, in tile-name order, and
/// collects warnings when asked to.
pub(crate) fn for_each_outcome<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    pos: Pos,
    mut warnings: Option<&mut Vec<Warning>>,
    mut valid: impl FnMut(TileId, &Evaluation<S>),
) {
    let displaced = assembly.get(pos);
    let list = candidates(system, assembly, pos, warnings.is_some());
    let mut visit = |inv: TileId| {
        if inv == displaced || !(system.concentration(inv) > S::zero()) {
            return;
        }
        let ev = evaluate(system, assembly, pos, inv);
        if !ev.energy_ok() {
            return;
        }
        if ev.fully_mediated() {
            valid(inv, &ev);
        } else if let Some(w) = warnings.as_deref_mut() {
            w.push(Warning { pos, invader: inv, displaced, unmediated: ev.unmediated(), event: None });
        }
    };
    match list {
        Some(list) => list.into_iter().for_each(&mut visit),
        None => system.ids_by_name().iter().copied().for_each(&mut visit),
    }
}

/// Superset of the invaders that can matter at `pos`, in name order, or
/// `None` when every tile must be tried. A valid invader forms a bond with
/// the first neighbour; an energetically allowed one either forms a bond
/// somewhere or keeps one of the current bonds.
fn candidates<S: Scalar>(system: &TileSystem<S>, assembly: &Assembly, pos: Pos, audit: bool) -> Option<Vec<TileId>> {
    let old = system.tile(assembly.get(pos));
    let sides: Vec<(Dir, [Label; 2])> = Dir::ALL
        .into_iter()
        .filter_map(|d| assembly.neighbor(pos, d).map(|n| (d, system.tile(assembly.get(n)).side(d.opposite()))))
        .collect();
    let (&(d0, nb0), rest) = sides.split_first()?;
    let list = |d: Dir, s: usize, l: Label| if l.is_inert() { &[][..] } else { system.with_label(d, s, l) };
    if !audit {
        // Mediation needs a new bond on every side, so a candidate must
        // carry a matching label on each of them.
        let fits = |id: TileId| {
            let t = system.tile(id);
            rest.iter().all(|&(d, nb)| (0..2).any(|s| bonded(t.side(d)[s], nb[s])))
        };
        let (a, b) = (list(d0, 0, nb0[0]), list(d0, 1, nb0[1]));
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if system.name_rank(x) < system.name_rank(y) => {
                    i += 1;
                    x
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (_, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            if fits(next) {
                out.push(next);
            }
        }
        return Some(out);
    }
    let mut out: Vec<TileId> = Vec::new();
    let mut any_bond = false;
    for &(d, nb) in &sides {
        for s in 0..2 {
            out.extend_from_slice(list(d, s, nb[s]));
            any_bond |= bonded(old.side(d)[s], nb[s]);
        }
    }
    if !any_bond {
        return None;
    }
    out.sort_unstable_by_key(|id| system.name_rank(*id));
    out.dedup();
    Some(out)
}

/// All valid displacements by tiles present in solution, ordered by
/// position (row-major) then invader name.
pub fn enumerate_reactions<S: Scalar>(system: &TileSystem<S>, assembly: &Assembly) -> Vec<Reaction<S>> {
    let mut out = Vec::new();
    for pos in assembly.positions() {
        cell_outcomes(system, assembly, pos, &mut out, None);
    }
    out
}

/// Energetically allowed replacements that would not be mediated on every
/// neighbouring side. These are reported, never executed.
pub fn audit_warnings<S: Scalar>(system: &TileSystem<S>, assembly: &Assembly) -> Vec<Warning> {
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    for pos in assembly.positions() {
        cell_outcomes(system, assembly, pos, &mut scratch, Some(&mut out));
        scratch.clear();
    }
    out
}

/// Applies a reaction in place after re-validating it.
pub fn apply_reaction_in_place<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &mut Assembly,
    reaction: &Reaction<S>,
) -> Result<(), ModelError> {
    let here = assembly.try_get(reaction.pos)?;
    if here != reaction.displaced {
        return Err(ModelError::StaleReaction(reaction.pos));
    }
    let ev = evaluate(system, assembly, reaction.pos, reaction.invader);
    if reaction.invader == here || !ev.fully_mediated() || !ev.energy_ok() {
        return Err(ModelError::StaleReaction(reaction.pos));
    }
    assembly.set(reaction.pos, reaction.invader);
    Ok(())
}

/// Functional form of [`apply_reaction_in_place`]; also checks the energy
/// bookkeeping against a full recomputation in debug builds.
pub fn apply_reaction<S: Scalar>(
    system: &TileSystem<S>,
    assembly: &Assembly,
    reaction: &Reaction<S>,
) -> Result<Assembly, ModelError> {
    let mut next = assembly.clone();
    apply_reaction_in_place(system, &mut next, reaction)?;
    debug_assert!({
        let before = bond_energy(system, assembly);
        let after = bond_energy(system, &next);
        (after - (before + reaction.delta_e)).abs() <= S::sum_tolerance(before.abs() + after.abs())
    });
    Ok(next)
}

/// The reaction undoing `reaction`, if it is valid in the post-state.
pub fn reverse_of<S: Scalar>(
    system: &TileSystem<S>,
    after: &Assembly,
    reaction: &Reaction<S>,
) -> Option<Reaction<S>> {
    if after.get(reaction.pos) != reaction.invader {
        return None;
    }
    validate_displacement(system, after, reaction.pos, reaction.displaced).ok()?.reaction()
}
