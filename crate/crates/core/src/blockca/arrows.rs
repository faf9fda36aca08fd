use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::grid::{check_symbols, read_block, run_bca2d, write_block, BlockId, Boundary2D, Grid2D, Partitions};
use super::rule::{Block, BlockRule2D, Symbol};
use super::BlockcaError;

/// Grid plus one phase bit per cell. A cell with bit `b` currently offers
/// itself to its block of partition `parity0 ^ b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArrowGrid {
    grid: Grid2D,
    phase: Vec<bool>,
    parity0: u8,
    boundary: Boundary2D,
}

/// Local time of every cell and whether neighbouring times are coherent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSheet {
    pub times: Vec<i64>,
    pub values: Vec<Symbol>,
    pub consistent: bool,
}

impl TimeSheet {
    pub fn flat(grid: &Grid2D) -> Self {
        Self { times: vec![0; grid.len()], values: grid.cells().to_vec(), consistent: true }
    }

    pub fn min_time(&self, live: impl Iterator<Item = usize>) -> Option<i64> {
        live.map(|i| self.times[i]).min()
    }

    pub fn max_time(&self, live: impl Iterator<Item = usize>) -> Option<i64> {
        live.map(|i| self.times[i]).max()
    }
}

impl ArrowGrid {
    /// All arrows point into the blocks of partition `parity0`.
    pub fn new(grid: Grid2D, parity0: u8, boundary: Boundary2D) -> Self {
        let phase = vec![false; grid.len()];
        Self { grid, phase, parity0: parity0 & 1, boundary }
    }

    pub fn from_parts(
        grid: Grid2D,
        phase: Vec<bool>,
        parity0: u8,
        boundary: Boundary2D,
    ) -> Result<Self, BlockcaError> {
        if phase.len() != grid.len() {
            return Err(BlockcaError::Ragged);
        }
        Ok(Self { grid, phase, parity0: parity0 & 1, boundary })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn phase(&self) -> &[bool] {
        &self.phase
    }

    pub fn parity0(&self) -> u8 {
        self.parity0
    }

    pub fn boundary(&self) -> Boundary2D {
        self.boundary
    }

    pub fn partitions(&self) -> Result<Partitions, BlockcaError> {
        Partitions::new(&self.grid, self.boundary)
    }

    /// Partition the cell currently points into.
    pub fn target_parity(&self, cell: usize) -> u8 {
        self.parity0 ^ self.phase[cell] as u8
    }

    pub fn fireable(&self, parity: u8, corners: &[Option<usize>; 4]) -> bool {
        corners.iter().flatten().all(|&c| self.target_parity(c) == parity)
    }

    /// All member arrows point out, so the block was the last to touch them.
    pub fn unfireable(&self, parity: u8, corners: &[Option<usize>; 4]) -> bool {
        corners.iter().flatten().all(|&c| self.target_parity(c) != parity)
    }

    pub fn fireable_blocks(&self, parts: &Partitions) -> Vec<BlockId> {
        parts
            .all_blocks()
            .filter(|(id, c)| self.fireable(id.parity, c))
            .map(|(id, _)| *id)
            .collect()
    }

    /// Rewrites a fireable block and flips its arrows.
    pub fn fire(
        &mut self,
        rule: &BlockRule2D,
        parts: &Partitions,
        id: BlockId,
        sheet: Option<&mut TimeSheet>,
    ) -> Result<(), BlockcaError> {
        let corners = parts.find(id).ok_or(BlockcaError::NoSuchBlock(id))?;
        if !self.fireable(id.parity, &corners) {
            return Err(BlockcaError::NotFireable(id));
        }
        let (b, real) = read_block(&self.grid, &corners);
        self.write(&corners, rule.apply_partial(b, real), sheet, 1);
        Ok(())
    }

    /// Undoes the last update of a block, writing the given predecessor.
    pub fn unfire(
        &mut self,
        parts: &Partitions,
        id: BlockId,
        predecessor: Block,
        sheet: Option<&mut TimeSheet>,
    ) -> Result<(), BlockcaError> {
        let corners = parts.find(id).ok_or(BlockcaError::NoSuchBlock(id))?;
        if !self.unfireable(id.parity, &corners) {
            return Err(BlockcaError::NotFireable(id));
        }
        self.write(&corners, predecessor, sheet, -1);
        Ok(())
    }

    /// Predecessors available to [`ArrowGrid::unfire`].
    pub fn predecessors(&self, rule: &BlockRule2D, corners: &[Option<usize>; 4]) -> Vec<Block> {
        let (b, real) = read_block(&self.grid, corners);
        rule.partial_preimages(b, real)
    }

    fn write(&mut self, corners: &[Option<usize>; 4], b: Block, sheet: Option<&mut TimeSheet>, dt: i64) {
        write_block(&mut self.grid, corners, b);
        for &c in corners.iter().flatten() {
            self.phase[c] = !self.phase[c];
        }
        if let Some(sheet) = sheet {
            for &c in corners.iter().flatten() {
                sheet.times[c] += dt;
                sheet.values[c] = self.grid.get_index(c);
            }
        }
    }
}

/// Which blocks to fire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    Blocks(Vec<BlockId>),
    /// Up to `firings` uniformly chosen fireable blocks.
    Random { firings: usize, seed: u64 },
}

pub fn async_run2d(
    rule: &BlockRule2D,
    arrows: &ArrowGrid,
    schedule: &Schedule,
) -> Result<(ArrowGrid, TimeSheet), BlockcaError> {
    check_symbols(rule, arrows.grid())?;
    let parts = arrows.partitions()?;
    let mut state = arrows.clone();
    let mut sheet = TimeSheet::flat(arrows.grid());
    for (i, &p) in arrows.phase.iter().enumerate() {
        sheet.times[i] = p as i64;
    }
    match schedule {
        Schedule::Blocks(ids) => {
            for &id in ids {
                state.fire(rule, &parts, id, Some(&mut sheet))?;
            }
        }
        Schedule::Random { firings, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for _ in 0..*firings {
                let ready = state.fireable_blocks(&parts);
                let Some(&id) = ready.choose(&mut rng) else { break };
                state.fire(rule, &parts, id, Some(&mut sheet))?;
            }
        }
    }
    sheet.consistent = sheet_is_consistent(&state, &parts, &sheet);
    Ok((state, sheet))
}

/// Times within a block differ by at most one and agree with the arrows.
pub fn sheet_is_consistent(arrows: &ArrowGrid, parts: &Partitions, sheet: &TimeSheet) -> bool {
    let live: Vec<usize> = arrows.grid.live_cells().collect();
    if live.iter().any(|&c| (sheet.times[c].rem_euclid(2) == 1) != arrows.phase[c]) {
        return false;
    }
    parts.all_blocks().all(|(_, corners)| {
        let ts: Vec<i64> = corners.iter().flatten().map(|&c| sheet.times[c]).collect();
        match (ts.iter().min(), ts.iter().max()) {
            (Some(lo), Some(hi)) => hi - lo <= 1,
            _ => true,
        }
    })
}

/// Fires every fireable block until every cell has local time `target`.
pub fn complete_to(
    rule: &BlockRule2D,
    arrows: &mut ArrowGrid,
    parts: &Partitions,
    sheet: &mut TimeSheet,
    target: i64,
) -> Result<(), BlockcaError> {
    loop {
        let mut fired = false;
        for (id, corners) in parts.all_blocks() {
            let lagging = corners.iter().flatten().all(|&c| sheet.times[c] < target);
            if lagging && arrows.fireable(id.parity, corners) {
                arrows.fire(rule, parts, *id, Some(sheet))?;
                fired = true;
            }
        }
        if !fired {
            break;
        }
    }
    let live: Vec<usize> = arrows.grid.live_cells().collect();
    if live.iter().any(|&c| sheet.times[c] != target) {
        return Err(BlockcaError::Incomplete(target));
    }
    Ok(())
}

/// Deliberate defect for mutation testing of the equivalence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// On firing number `at` (0-based), the first member cell keeps its arrow.
    SkipArrowFlip { at: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub trial: usize,
    pub cell: (usize, usize),
    pub local_time: i64,
    pub expected: Symbol,
    pub actual: Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub trials: usize,
    pub firings: usize,
    pub checked_cells: usize,
    pub counterexample: Option<Counterexample>,
}

impl EquivalenceReport {
    pub fn pass(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Random asynchronous schedules compared cell by cell against the
/// synchronous history at each cell's local time.
#[allow(clippy::too_many_arguments)]
pub fn check_async_sync_equivalence(
    rule: &BlockRule2D,
    initial: &Grid2D,
    parity0: u8,
    boundary: Boundary2D,
    trials: usize,
    firings: usize,
    seed: u64,
    fault: Option<Fault>,
) -> Result<EquivalenceReport, BlockcaError> {
    check_symbols(rule, initial)?;
    let start = ArrowGrid::new(initial.clone(), parity0, boundary);
    let parts = start.partitions()?;
    let live: Vec<usize> = initial.live_cells().collect();
    let mut history = run_bca2d(rule, initial, 0, parity0, boundary)?;
    let mut report = EquivalenceReport { trials, firings, checked_cells: 0, counterexample: None };
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let mut state = start.clone();
        let mut sheet = TimeSheet::flat(initial);
        for n in 0..firings {
            let ready = state.fireable_blocks(&parts);
            let Some(&id) = ready.choose(&mut rng) else { break };
            let corners = parts.find(id).expect("listed block");
            state.fire(rule, &parts, id, Some(&mut sheet))?;
            if let Some(Fault::SkipArrowFlip { at }) = fault {
                if at == n {
                    if let Some(&c) = corners.iter().flatten().next() {
                        state.phase[c] = !state.phase[c];
                    }
                }
            }
        }
        let horizon = live.iter().map(|&c| sheet.times[c]).max().unwrap_or(0).max(0) as usize;
        while history.len() <= horizon {
            let mut next = history.last().expect("non-empty").clone();
            let t = history.len() - 1;
            super::grid::step_bca2d(rule, &mut next, &parts, (parity0 ^ t as u8) & 1);
            history.push(next);
        }
        for &c in &live {
            let t = sheet.times[c];
            report.checked_cells += 1;
            let expected = history[t as usize].get_index(c);
            let actual = state.grid.get_index(c);
            if expected != actual || !sheet_is_consistent(&state, &parts, &sheet) {
                report.counterexample = Some(Counterexample {
                    trial,
                    cell: initial.coords(c),
                    local_time: t,
                    expected,
                    actual,
                });
                return Ok(report);
            }
        }
    }
    Ok(report)
}
