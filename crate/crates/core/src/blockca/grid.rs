use super::rule::{Block, BlockRule2D, Symbol};
use super::BlockcaError;

/// Rectangular cell grid, row 0 at the bottom. Cells outside the optional
/// mask do not exist; blocks overlapping them are partial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid2D {
    width: usize,
    height: usize,
    cells: Vec<Symbol>,
    mask: Option<Vec<bool>>,
}

impl Grid2D {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![0; width * height], mask: None }
    }

    pub fn from_rows(rows_top_first: &[&[Symbol]]) -> Result<Self, BlockcaError> {
        let height = rows_top_first.len();
        let width = rows_top_first.first().map_or(0, |r| r.len());
        let mut g = Self::new(width, height);
        for (k, row) in rows_top_first.iter().enumerate() {
            if row.len() != width {
                return Err(BlockcaError::Ragged);
            }
            let y = height - 1 - k;
            for (x, &v) in row.iter().enumerate() {
                g.set(x, y, v);
            }
        }
        Ok(g)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self, BlockcaError> {
        if mask.len() != self.cells.len() {
            return Err(BlockcaError::Ragged);
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Symbol] {
        &self.cells
    }

    pub fn is_masked(&self) -> bool {
        self.mask.is_some()
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.width, i / self.width)
    }

    pub fn exists(&self, i: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[i])
    }

    /// Indices of existing cells.
    pub fn live_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(|&i| self.exists(i))
    }

    pub fn get(&self, x: usize, y: usize) -> Symbol {
        self.cells[self.index(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, v: Symbol) {
        let i = self.index(x, y);
        self.cells[i] = v;
    }

    pub fn get_index(&self, i: usize) -> Symbol {
        self.cells[i]
    }

    pub fn set_index(&mut self, i: usize, v: Symbol) {
        self.cells[i] = v;
    }

    /// Number of existing cells holding `v`.
    pub fn count(&self, v: Symbol) -> usize {
        self.live_cells().filter(|&i| self.cells[i] == v).count()
    }

    /// Rows from top to bottom, `.` for missing cells.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let i = self.index(x, y);
                if self.exists(i) {
                    out.push_str(&self.cells[i].to_string());
                } else {
                    out.push('.');
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary2D {
    /// Torus; both dimensions must be even.
    Periodic,
    /// Blocks sticking out of the grid (or mask) follow the rule's
    /// boundary behaviour.
    Bounded,
}

/// A block of the Margolus partition with the given parity, addressed by its
/// south-west corner `(x, y)` with `x` and `y` both of that parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId {
    pub parity: u8,
    pub x: i64,
    pub y: i64,
}

/// Block geometry of a grid: for each partition, the member cells of each
/// block (`None` for corners off the grid).
#[derive(Debug, Clone)]
pub struct Partitions {
    blocks: [Vec<(BlockId, [Option<usize>; 4])>; 2],
    /// For every cell, its block index in partition 0 and partition 1.
    owner: Vec<[usize; 2]>,
}

impl Partitions {
    pub fn new(grid: &Grid2D, boundary: Boundary2D) -> Result<Self, BlockcaError> {
        let (w, h) = (grid.width as i64, grid.height as i64);
        if boundary == Boundary2D::Periodic {
            if w % 2 != 0 || h % 2 != 0 || w == 0 || h == 0 {
                return Err(BlockcaError::OddDimensions { width: grid.width, height: grid.height });
            }
            if grid.is_masked() {
                return Err(BlockcaError::MaskedPeriodic);
            }
        }
        let cell = |x: i64, y: i64| -> Option<usize> {
            let (x, y) = match boundary {
                Boundary2D::Periodic => (x.rem_euclid(w), y.rem_euclid(h)),
                Boundary2D::Bounded => {
                    if x < 0 || y < 0 || x >= w || y >= h {
                        return None;
                    }
                    (x, y)
                }
            };
            let i = grid.index(x as usize, y as usize);
            grid.exists(i).then_some(i)
        };
        let mut blocks: [Vec<_>; 2] = [Vec::new(), Vec::new()];
        let mut owner = vec![[usize::MAX; 2]; grid.len()];
        for parity in 0..2u8 {
            let p = parity as i64;
            let start = if boundary == Boundary2D::Periodic { p } else { p - 2 };
            let mut y = start;
            while y < h {
                let mut x = start;
                while x < w {
                    let corners = [cell(x, y + 1), cell(x + 1, y + 1), cell(x + 1, y), cell(x, y)];
                    if corners.iter().any(Option::is_some) {
                        let k = blocks[parity as usize].len();
                        for c in corners.iter().flatten() {
                            owner[*c][parity as usize] = k;
                        }
                        blocks[parity as usize].push((BlockId { parity, x, y }, corners));
                    }
                    x += 2;
                }
                y += 2;
            }
        }
        Ok(Self { blocks, owner })
    }

    pub fn blocks(&self, parity: u8) -> &[(BlockId, [Option<usize>; 4])] {
        &self.blocks[parity as usize & 1]
    }

    pub fn all_blocks(&self) -> impl Iterator<Item = &(BlockId, [Option<usize>; 4])> {
        self.blocks[0].iter().chain(&self.blocks[1])
    }

    pub fn find(&self, id: BlockId) -> Option<[Option<usize>; 4]> {
        self.blocks(id.parity).iter().find(|(b, _)| *b == id).map(|(_, c)| *c)
    }

    /// Index into `blocks(parity)` of the block holding `cell`.
    pub fn owner(&self, cell: usize, parity: u8) -> usize {
        self.owner[cell][parity as usize & 1]
    }
}

pub(crate) fn read_block(grid: &Grid2D, corners: &[Option<usize>; 4]) -> (Block, [bool; 4]) {
    let mut b = [0; 4];
    let mut real = [false; 4];
    for k in 0..4 {
        if let Some(i) = corners[k] {
            b[k] = grid.cells[i];
            real[k] = true;
        }
    }
    (b, real)
}

pub(crate) fn write_block(grid: &mut Grid2D, corners: &[Option<usize>; 4], b: Block) {
    for k in 0..4 {
        if let Some(i) = corners[k] {
            grid.cells[i] = b[k];
        }
    }
}

/// One synchronous step of partition `parity`.
pub fn step_bca2d(rule: &BlockRule2D, grid: &mut Grid2D, parts: &Partitions, parity: u8) {
    for (_, corners) in parts.blocks(parity) {
        let (b, real) = read_block(grid, corners);
        write_block(grid, corners, rule.apply_partial(b, real));
    }
}

/// History of `steps + 1` grids; step `t` uses partition `parity0 ^ (t & 1)`.
pub fn run_bca2d(
    rule: &BlockRule2D,
    initial: &Grid2D,
    steps: usize,
    parity0: u8,
    boundary: Boundary2D,
) -> Result<Vec<Grid2D>, BlockcaError> {
    check_symbols(rule, initial)?;
    let parts = Partitions::new(initial, boundary)?;
    let mut history = Vec::with_capacity(steps + 1);
    history.push(initial.clone());
    let mut g = initial.clone();
    for t in 0..steps {
        step_bca2d(rule, &mut g, &parts, (parity0 ^ t as u8) & 1);
        history.push(g.clone());
    }
    Ok(history)
}

pub(crate) fn check_symbols(rule: &BlockRule2D, grid: &Grid2D) -> Result<(), BlockcaError> {
    let n = rule.alphabet();
    match grid.cells.iter().find(|&&v| v as usize >= n) {
        Some(&v) => Err(BlockcaError::SymbolOutOfRange { symbol: v, alphabet: n }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_partitions_cover_every_cell_once() {
        let g = Grid2D::new(6, 4);
        let p = Partitions::new(&g, Boundary2D::Periodic).unwrap();
        for parity in 0..2 {
            let mut seen = vec![0; g.len()];
            for (_, c) in p.blocks(parity) {
                for i in c.iter().flatten() {
                    seen[*i] += 1;
                }
            }
            assert!(seen.iter().all(|&s| s == 1));
            assert_eq!(p.blocks(parity).len(), 6);
        }
    }

    #[test]
    fn bounded_odd_partition_has_partial_blocks() {
        let g = Grid2D::new(4, 4);
        let p = Partitions::new(&g, Boundary2D::Bounded).unwrap();
        assert_eq!(p.blocks(0).len(), 4);
        assert_eq!(p.blocks(1).len(), 9);
    }

    #[test]
    fn odd_periodic_is_rejected() {
        assert!(Partitions::new(&Grid2D::new(3, 4), Boundary2D::Periodic).is_err());
    }
}
