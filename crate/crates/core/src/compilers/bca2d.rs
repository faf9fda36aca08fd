//! Two-dimensional block automata on a tile lattice turned by 45 degrees.
//!
//! Every tile position holds one Margolus block (of either partition) and
//! every tile side stands for the block corner it shares with the facing
//! tile: N for NW, E for NE, S for SE, W for SW. A side carries the corner's
//! value before and after the block's last update, each tagged with the
//! local time mod 3, so a block can only update after all four neighbours
//! have read its previous output.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::blockca::{
    sheet_is_consistent, ArrowGrid, Block, BlockId, BlockRule2D, Boundary2D, Grid2D, Partitions, Symbol, TimeSheet,
};
use crate::engine::enumerate_state_space;
use crate::model::{Assembly, Dir, Pos, TileId};
use crate::Scalar;

use super::design::{Design, Layout, TileDef};
use super::{Bias, CellTag, CompileError, Construction, Meta, Readout};

/// Rectangle of `cols` x `rows` tile positions and the masked grid of cells
/// shared between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bca2dLayout {
    pub cols: usize,
    pub rows: usize,
    shift: (i64, i64),
    size: (usize, usize),
}

impl Bca2dLayout {
    pub fn new(cols: usize, rows: usize) -> Result<Self, CompileError> {
        if cols < 3 || rows < 3 {
            return Err(CompileError::BadSize(format!("tile array {cols}x{rows}, need at least 3x3")));
        }
        let mut l = Self { cols, rows, shift: (0, 0), size: (0, 0) };
        let cells: Vec<(i64, i64)> = l.raw_cells().collect();
        let (minx, miny) = (cells.iter().map(|c| c.0).min().unwrap(), cells.iter().map(|c| c.1).min().unwrap());
        let (maxx, maxy) = (cells.iter().map(|c| c.0).max().unwrap(), cells.iter().map(|c| c.1).max().unwrap());
        // Even shifts keep the partition parity of every block.
        l.shift = (minx - minx.rem_euclid(2), miny - miny.rem_euclid(2));
        l.size = ((maxx - l.shift.0 + 1) as usize, (maxy - l.shift.1 + 1) as usize);
        Ok(l)
    }

    fn k(&self) -> i64 {
        let k = self.rows as i64 - 1;
        k + k.rem_euclid(2)
    }

    fn raw_block(&self, i: usize, j: usize) -> (i64, i64) {
        (i as i64 - j as i64 + self.k(), (i + j) as i64)
    }

    fn raw_cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.rows).flat_map(move |j| {
            (0..self.cols).flat_map(move |i| {
                let (x, y) = self.raw_block(i, j);
                let e = (i + 1 < self.cols).then_some((x + 1, y + 1));
                let n = (j + 1 < self.rows).then_some((x, y + 1));
                e.into_iter().chain(n)
            })
        })
    }

    pub fn width(&self) -> usize {
        self.size.0
    }

    pub fn height(&self) -> usize {
        self.size.1
    }

    /// Number of live cells.
    pub fn cell_count(&self) -> usize {
        (self.cols - 1) * self.rows + self.cols * (self.rows - 1)
    }

    /// Zero grid with exactly the shared cells live.
    pub fn grid(&self) -> Grid2D {
        let mut mask = vec![false; self.size.0 * self.size.1];
        for (x, y) in self.raw_cells() {
            let (x, y) = ((x - self.shift.0) as usize, (y - self.shift.1) as usize);
            mask[y * self.size.0 + x] = true;
        }
        Grid2D::new(self.size.0, self.size.1).with_mask(mask).expect("mask has the grid size")
    }

    /// The block held by tile position `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> BlockId {
        let (x, y) = self.raw_block(i, j);
        let (x, y) = (x - self.shift.0, y - self.shift.1);
        BlockId { parity: x.rem_euclid(2) as u8, x, y }
    }

    pub fn tile_of(&self, id: BlockId) -> Option<(usize, usize)> {
        let (x, y) = (id.x + self.shift.0, id.y + self.shift.1);
        let d = x - self.k();
        if (d + y).rem_euclid(2) != 0 {
            return None;
        }
        let (i, j) = ((y + d) / 2, (y - d) / 2);
        (i >= 0 && j >= 0 && (i as usize) < self.cols && (j as usize) < self.rows).then(|| (i as usize, j as usize))
    }

    /// Which sides of position `(i, j)` face another tile.
    pub fn real_sides(&self, i: usize, j: usize) -> [bool; 4] {
        [j + 1 < self.rows, i + 1 < self.cols, j > 0, i > 0]
    }

    /// Grid index of the corner behind side `d`, if that side faces a tile.
    pub fn cell(&self, i: usize, j: usize, d: Dir) -> Option<usize> {
        if !self.real_sides(i, j)[d.index()] {
            return None;
        }
        let b = self.block(i, j);
        let (x, y) = match d {
            Dir::N => (b.x, b.y + 1),
            Dir::E => (b.x + 1, b.y + 1),
            Dir::S => (b.x + 1, b.y),
            Dir::W => (b.x, b.y),
        };
        Some(y as usize * self.size.0 + x as usize)
    }

    fn neighbor(&self, i: usize, j: usize, d: Dir) -> Option<(usize, usize)> {
        match d {
            Dir::N => (j + 1 < self.rows).then(|| (i, j + 1)),
            Dir::E => (i + 1 < self.cols).then(|| (i + 1, j)),
            Dir::S => (j > 0).then(|| (i, j - 1)),
            Dir::W => (i > 0).then(|| (i - 1, j)),
        }
    }
}

/// Role of a grid cell in a walled experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Gas,
    Wall,
    Circuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bca2dSpec {
    pub rule: BlockRule2D,
    pub layout: Bca2dLayout,
    /// Cell values at local time 0; must have the shape of `layout.grid()`.
    pub initial: Grid2D,
    /// Partition whose blocks update first.
    pub parity0: u8,
    /// Edge positions whose block may also turn empty into one ball at the
    /// corner opposite its missing one.
    pub sources: Vec<(usize, usize)>,
    pub regions: Option<Vec<Region>>,
}

impl Bca2dSpec {
    pub fn new(rule: BlockRule2D, layout: Bca2dLayout, initial: Grid2D) -> Self {
        Self { rule, layout, initial, parity0: 0, sources: Vec::new(), regions: None }
    }

    pub fn with_sources(mut self, sources: Vec<(usize, usize)>) -> Self {
        self.sources = sources;
        self
    }

    pub fn with_regions(mut self, regions: Vec<Region>) -> Self {
        self.regions = Some(regions);
        self
    }
}

/// Axis-aligned rectangle of grid cells, `x..x + w` by `y..y + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl CellRect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.w && y < self.y + self.h
    }
}

/// Walled experiment: live cells inside `gas` start empty and are fed by a
/// ball source, cells inside `circuit` start with `balls`, and every other
/// live cell is wall (symbol 1). Every edge position whose cells are all
/// gas becomes a ball source.
pub fn walled_spec(
    rule: BlockRule2D,
    layout: Bca2dLayout,
    gas: CellRect,
    circuit: CellRect,
    balls: &[(usize, usize)],
) -> Result<Bca2dSpec, CompileError> {
    let mut grid = layout.grid();
    let mut regions = vec![Region::Wall; grid.len()];
    let live: Vec<usize> = grid.live_cells().collect();
    for &i in &live {
        let (x, y) = grid.coords(i);
        regions[i] = if gas.contains(x, y) {
            Region::Gas
        } else if circuit.contains(x, y) {
            Region::Circuit
        } else {
            Region::Wall
        };
        grid.set_index(i, (regions[i] == Region::Wall) as Symbol);
    }
    for &(x, y) in balls {
        let inside = x < grid.width() && y < grid.height();
        let i = if inside { grid.index(x, y) } else { 0 };
        if !inside || !grid.exists(i) || regions[i] != Region::Circuit {
            return Err(CompileError::BadGrid(format!("ball ({x}, {y}) is not in the circuit region")));
        }
        grid.set_index(i, 1);
    }
    let sources: Vec<(usize, usize)> = (0..layout.rows)
        .flat_map(|j| (0..layout.cols).map(move |i| (i, j)))
        .filter(|&(i, j)| {
            let real = layout.real_sides(i, j);
            real.iter().filter(|r| !**r).count() == 1
                && Dir::ALL.iter().filter_map(|&d| layout.cell(i, j, d)).all(|c| regions[c] == Region::Gas)
        })
        .collect();
    if sources.is_empty() {
        return Err(CompileError::BadGrid("no edge position lies entirely in the gas".into()));
    }
    Ok(Bca2dSpec::new(rule, layout, grid).with_sources(sources).with_regions(regions))
}

/// Gas areas with a fixed layout for the entropic driving experiment.
pub const ENTROPIC_GAS_AREAS: [usize; 3] = [16, 64, 256];

/// Entropic driving setup on a 13 x 13 tile array: a gas rectangle of
/// exactly `gas_cells` live cells along the bottom edge, fed by sources, and
/// a 4 x 4 circuit holding one ball, walled off above it. Returns the spec
/// and the circuit rectangle.
pub fn entropic_spec(gas_cells: usize) -> Result<(Bca2dSpec, CellRect), CompileError> {
    let gas = match gas_cells {
        16 => CellRect { x: 10, y: 0, w: 5, h: 5 },
        64 => CellRect { x: 4, y: 0, w: 10, h: 11 },
        256 => CellRect { x: 2, y: 0, w: 20, h: 19 },
        n => return Err(CompileError::BadGrid(format!("no layout for a gas of {n} cells"))),
    };
    let circuit = CellRect { x: gas.x + gas.w / 2 - 2, y: gas.h + 2, w: 4, h: 4 };
    let layout = Bca2dLayout::new(13, 13)?;
    let spec = walled_spec(crate::blockca::bbm_rule(), layout, gas, circuit, &[(circuit.x, circuit.y + 1)])?;
    Ok((spec, circuit))
}

/// Checks that wall cells can never change whatever the other cells of
/// their blocks hold, and that no block joins gas to circuit.
fn check_regions(spec: &Bca2dSpec, parts: &Partitions, regions: &[Region]) -> Result<(), CompileError> {
    for (id, corners) in parts.all_blocks() {
        let live: Vec<(usize, usize)> = corners.iter().enumerate().filter_map(|(k, c)| c.map(|c| (k, c))).collect();
        let has = |r: Region| live.iter().any(|&(_, c)| regions[c] == r);
        if has(Region::Gas) && has(Region::Circuit) {
            return Err(CompileError::BadGrid(format!("block {id:?} touches both gas and circuit")));
        }
        if !has(Region::Wall) {
            continue;
        }
        let (base, real) = read(&spec.initial, corners);
        let free: Vec<usize> = live.iter().filter(|&&(_, c)| regions[c] != Region::Wall).map(|&(k, _)| k).collect();
        for bits in 0..spec.rule.alphabet().pow(free.len() as u32) {
            let mut b = base;
            let mut v = bits;
            for &k in &free {
                b[k] = (v % spec.rule.alphabet()) as Symbol;
                v /= spec.rule.alphabet();
            }
            let out = spec.rule.apply_partial(b, real);
            if live.iter().any(|&(k, c)| regions[c] == Region::Wall && out[k] != b[k]) {
                return Err(CompileError::BadGrid(format!("wall in block {id:?} is not stable")));
            }
        }
    }
    Ok(())
}

/// What a rule tile encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bca2dTile {
    /// Local time mod 3 of the input corners.
    pub phase: u8,
    pub input: Block,
    pub output: Block,
    pub real: [bool; 4],
    pub emits: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bca2dMeta {
    pub spec: Bca2dSpec,
    /// Indexed by tile id.
    pub tiles: Vec<Bca2dTile>,
}

/// Decoded cells of a 2D block automaton assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Bca2dReadout {
    pub arrows: ArrowGrid,
    pub sheet: TimeSheet,
}

const PHASE: [char; 3] = ['a', 'b', 'g'];

fn label(v: Symbol, phase: u8, tag: u8) -> String {
    format!("{v}{}{tag}", PHASE[phase as usize % 3])
}

fn block_text(b: &Block, real: [bool; 4]) -> String {
    (0..4).map(|k| if real[k] { b[k].to_string() } else { "-".into() }).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Context {
    tags: [Option<u8>; 4],
    source: bool,
}

impl Context {
    fn real(&self) -> [bool; 4] {
        self.tags.map(|t| t.is_some())
    }

    fn text(&self) -> String {
        let t: String = self.tags.iter().map(|t| t.map_or('x', |t| (b'0' + t) as char)).collect();
        format!("{}{t}", if self.source { 's' } else { 'b' })
    }
}

fn tile_def(ctx: &Context, t: &Bca2dTile) -> TileDef {
    let name = format!(
        "{}.{}.{}.{}",
        ctx.text(),
        t.phase,
        block_text(&t.input, t.real),
        block_text(&t.output, t.real)
    );
    let mut sides: [[String; 2]; 4] = Default::default();
    for d in Dir::ALL {
        let k = d.index();
        sides[k] = match ctx.tags[k] {
            None => ["-".into(), "-".into()],
            Some(tag) => {
                let i = label(t.input[k], t.phase, tag);
                let o = label(t.output[k], t.phase + 1, tag);
                match d {
                    Dir::N | Dir::E => [i, o],
                    Dir::S | Dir::W => [o, i],
                }
            }
        };
    }
    TileDef { name, sides }
}

fn blocks_over(alphabet: usize, real: [bool; 4]) -> Vec<Block> {
    let mut out = vec![[0 as Symbol; 4]];
    for (k, &r) in real.iter().enumerate() {
        if !r {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|b| {
                (0..alphabet).map(move |v| {
                    let mut b = b;
                    b[k] = v as Symbol;
                    b
                })
            })
            .collect();
    }
    out
}

fn read(grid: &Grid2D, corners: &[Option<usize>; 4]) -> (Block, [bool; 4]) {
    let mut b = [0; 4];
    let mut real = [false; 4];
    for k in 0..4 {
        if let Some(i) = corners[k] {
            b[k] = grid.get_index(i);
            real[k] = true;
        }
    }
    (b, real)
}

fn write(grid: &mut Grid2D, corners: &[Option<usize>; 4], b: Block) {
    for k in 0..4 {
        if let Some(i) = corners[k] {
            grid.set_index(i, b[k]);
        }
    }
}

fn same_shape(a: &Grid2D, b: &Grid2D) -> bool {
    a.width() == b.width() && a.height() == b.height() && (0..a.len()).all(|i| a.exists(i) == b.exists(i))
}

/// One synchronous step backwards through partition `parity`, taking the
/// first predecessor of every block.
fn step_back(rule: &BlockRule2D, grid: &Grid2D, parts: &Partitions, parity: u8) -> Result<Grid2D, CompileError> {
    let mut g = grid.clone();
    for (id, corners) in parts.blocks(parity) {
        let (b, real) = read(grid, corners);
        let pre = rule.partial_preimages(b, real);
        let p = pre.first().ok_or_else(|| {
            CompileError::BadRule(format!("block {id:?} of the initial grid has no predecessor"))
        })?;
        write(&mut g, corners, *p);
    }
    Ok(g)
}

fn validate(spec: &Bca2dSpec) -> Result<(), CompileError> {
    let l = &spec.layout;
    if !same_shape(&spec.initial, &l.grid()) {
        return Err(CompileError::BadGrid(format!(
            "initial grid must have the {}x{} masked shape of the {}x{} tile array",
            l.width(),
            l.height(),
            l.cols,
            l.rows
        )));
    }
    let n = spec.rule.alphabet();
    if let Some(i) = spec.initial.live_cells().find(|&i| spec.initial.get_index(i) as usize >= n) {
        return Err(CompileError::BadGrid(format!("cell {i} holds a symbol outside the alphabet of size {n}")));
    }
    if spec.parity0 > 1 {
        return Err(CompileError::BadGrid(format!("parity {}", spec.parity0)));
    }
    if let Some(r) = &spec.regions {
        if r.len() != spec.initial.len() {
            return Err(CompileError::BadGrid(format!("{} regions for {} cells", r.len(), spec.initial.len())));
        }
    }
    for &(i, j) in &spec.sources {
        if i >= l.cols || j >= l.rows || l.real_sides(i, j).iter().filter(|r| !**r).count() != 1 {
            return Err(CompileError::BadGrid(format!("source ({i}, {j}) is not on an edge of the tile array")));
        }
        if n < 2 {
            return Err(CompileError::BadRule("a ball source needs a symbol 1".into()));
        }
    }
    Ok(())
}

/// Compiles a 2D block automaton into a reversible tile system. Every tile
/// is bonded on each side at all times, so all displacements are
/// energy-neutral and the tile concentration is uniform.
pub fn compile_bca2d<S: Scalar>(spec: &Bca2dSpec) -> Result<Construction<S>, CompileError> {
    validate(spec)?;
    let l = spec.layout;
    let rule = &spec.rule;
    let source: HashSet<(usize, usize)> = spec.sources.iter().copied().collect();
    let partial = |i: usize, j: usize| l.real_sides(i, j).contains(&false);
    let ctx_at = |i: usize, j: usize| {
        let mut tags = [None; 4];
        for d in Dir::ALL {
            if let Some((a, b)) = l.neighbor(i, j, d) {
                let t = if source.contains(&(i, j)) || source.contains(&(a, b)) {
                    3
                } else {
                    partial(i, j) as u8 + partial(a, b) as u8
                };
                tags[d.index()] = Some(t);
            }
        }
        Context { tags, source: source.contains(&(i, j)) }
    };

    let contexts: BTreeSet<Context> =
        (0..l.rows).flat_map(|j| (0..l.cols).map(move |i| (i, j))).map(|(i, j)| ctx_at(i, j)).collect();
    let mut d = Design::new();
    let mut infos: Vec<(String, Bca2dTile)> = Vec::new();
    for ctx in &contexts {
        let real = ctx.real();
        for input in blocks_over(rule.alphabet(), real) {
            let mut outs = vec![(rule.apply_partial(input, real), false)];
            if ctx.source && (0..4).all(|k| !real[k] || input[k] == 0) {
                let missing = real.iter().position(|r| !r).expect("sources sit on an edge");
                let mut b = [0; 4];
                b[(missing + 2) % 4] = 1;
                outs.push((b, true));
            }
            for (output, emits) in outs {
                for phase in 0..3 {
                    let t = Bca2dTile { phase, input, output, real, emits };
                    let def = tile_def(ctx, &t);
                    infos.push((def.name.clone(), t));
                    d.add(def);
                }
            }
        }
    }

    // Local time 0 with every arrow into partition parity0: the other
    // partition last updated from time -1, parity0 from time -2.
    let parts = Partitions::new(&spec.initial, Boundary2D::Bounded)
        .map_err(|e| CompileError::BadGrid(e.to_string()))?;
    if let Some(r) = &spec.regions {
        check_regions(spec, &parts, r)?;
    }
    let p0 = spec.parity0;
    let g1 = step_back(rule, &spec.initial, &parts, p0 ^ 1)?;
    let g2 = step_back(rule, &g1, &parts, p0)?;
    let mut layout = Layout::new(l.cols, l.rows, "");
    let mut tags = Vec::with_capacity(l.cols * l.rows);
    for j in 0..l.rows {
        for i in 0..l.cols {
            let id = l.block(i, j);
            let corners = parts.find(id).expect("every tile position is a block of the grid");
            let (before, after, phase) =
                if id.parity == p0 { (&g2, &g1, 1) } else { (&g1, &spec.initial, 2) };
            let (input, real) = read(before, &corners);
            let (output, _) = read(after, &corners);
            let t = Bca2dTile { phase, input, output, real, emits: false };
            layout.set(i, j, tile_def(&ctx_at(i, j), &t).name);
            tags.push(CellTag::Block { parity: id.parity, x: id.x, y: id.y });
        }
    }
    let system = d.build::<S>()?;
    let initial = layout.assemble(&system)?;
    let mut tiles = vec![infos[0].1; system.tile_count()];
    for (name, t) in infos {
        tiles[system.require_tile(&name)?.index()] = t;
    }
    Ok(Construction {
        system,
        initial,
        tags,
        bias: Bias::neutral(),
        meta: Meta::Bca2d(Bca2dMeta { spec: spec.clone(), tiles }),
    })
}

fn meta_of<S: Scalar>(c: &Construction<S>) -> Result<&Bca2dMeta, CompileError> {
    match &c.meta {
        Meta::Bca2d(m) => Ok(m),
        _ => Err(CompileError::Decode("not a 2D block automaton construction".into())),
    }
}

/// Per cell: value, local time mod 3 and the partition it points into.
struct CellState {
    value: Symbol,
    phase: u8,
    target: u8,
}

fn decode_cells(m: &Bca2dMeta, a: &Assembly) -> Result<Vec<Option<CellState>>, CompileError> {
    let l = &m.spec.layout;
    if a.width() != l.cols || a.height() != l.rows {
        return Err(CompileError::Decode("assembly shape differs from the tile array".into()));
    }
    let tile = |i: usize, j: usize| -> Result<&Bca2dTile, CompileError> {
        let id = a.get(super::design::pos(i, j));
        m.tiles.get(id.index()).ok_or_else(|| CompileError::Decode(format!("unknown tile at ({i}, {j})")))
    };
    let mut out: Vec<Option<CellState>> = (0..m.spec.initial.len()).map(|_| None).collect();
    for j in 0..l.rows {
        for i in 0..l.cols {
            let p = tile(i, j)?;
            for d in [Dir::N, Dir::E] {
                let (Some(cell), Some((qi, qj))) = (l.cell(i, j, d), l.neighbor(i, j, d)) else { continue };
                let q = tile(qi, qj)?;
                let (kp, kq) = (d.index(), d.opposite().index());
                let state = if p.output[kp] == q.input[kq] && (p.phase + 1) % 3 == q.phase {
                    CellState { value: q.output[kq], phase: (q.phase + 1) % 3, target: l.block(i, j).parity }
                } else if p.input[kp] == q.output[kq] && p.phase == (q.phase + 1) % 3 {
                    CellState { value: p.output[kp], phase: (p.phase + 1) % 3, target: l.block(qi, qj).parity }
                } else {
                    return Err(CompileError::Decode(format!(
                        "tiles at ({i}, {j}) and ({qi}, {qj}) disagree on their shared cell"
                    )));
                };
                out[cell] = Some(state);
            }
        }
    }
    Ok(out)
}

/// Reads the arrow-augmented configuration off an assembly.
pub fn decode_bca2d<S: Scalar>(c: &Construction<S>, a: &Assembly) -> Result<ArrowGrid, CompileError> {
    let m = meta_of(c)?;
    let cells = decode_cells(m, a)?;
    arrows_of(m, &cells)
}

fn arrows_of(m: &Bca2dMeta, cells: &[Option<CellState>]) -> Result<ArrowGrid, CompileError> {
    let mut grid = m.spec.initial.clone();
    let mut phase = vec![false; grid.len()];
    for (i, s) in cells.iter().enumerate() {
        if let Some(s) = s {
            grid.set_index(i, s.value);
            phase[i] = s.target != m.spec.parity0;
        }
    }
    ArrowGrid::from_parts(grid, phase, m.spec.parity0, Boundary2D::Bounded)
        .map_err(|e| CompileError::Decode(e.to_string()))
}

/// Time sheet of an assembly, lifting each cell's local time mod 6 to the
/// value closest to `reference` (in `reference - 2 ..= reference + 3`).
pub fn extract_time_sheet_near<S: Scalar>(
    c: &Construction<S>,
    a: &Assembly,
    reference: &TimeSheet,
) -> Result<TimeSheet, CompileError> {
    let m = meta_of(c)?;
    let cells = decode_cells(m, a)?;
    let arrows = arrows_of(m, &cells)?;
    let mut times = vec![0i64; cells.len()];
    for (i, s) in cells.iter().enumerate() {
        if let Some(s) = s {
            let bit = (s.target != m.spec.parity0) as i64;
            let r = (3 * bit + 4 * s.phase as i64) % 6;
            let base = reference.times[i];
            let mut t = base + (r - base).rem_euclid(6);
            if t > base + 3 {
                t -= 6;
            }
            times[i] = t;
        }
    }
    let parts = arrows.partitions().map_err(|e| CompileError::Decode(e.to_string()))?;
    let mut sheet = TimeSheet { times, values: arrows.grid().cells().to_vec(), consistent: true };
    sheet.consistent = sheet_is_consistent(&arrows, &parts, &sheet);
    Ok(sheet)
}

/// Time sheet of an assembly that is within two updates of time 0.
pub fn extract_time_sheet<S: Scalar>(c: &Construction<S>, a: &Assembly) -> Result<TimeSheet, CompileError> {
    let m = meta_of(c)?;
    extract_time_sheet_near(c, a, &TimeSheet::flat(&m.spec.initial))
}

/// Applies one displacement at tile position `pos` to a tracked time sheet
/// and returns the cells it touched. Forward updates add 1 to the local
/// time of each cell of the block, backward ones subtract 1. The
/// `consistent` flag is left alone.
pub fn track_time_sheet<S: Scalar>(
    c: &Construction<S>,
    sheet: &mut TimeSheet,
    pos: Pos,
    displaced: TileId,
    invader: TileId,
) -> Result<[Option<usize>; 4], CompileError> {
    let m = meta_of(c)?;
    let l = &m.spec.layout;
    let get = |id: TileId| {
        m.tiles.get(id.index()).ok_or_else(|| CompileError::Decode(format!("unknown tile {}", id.index())))
    };
    let (old, new) = (get(displaced)?, get(invader)?);
    let forward = new.phase == (old.phase + 2) % 3;
    if !forward && new.phase != (old.phase + 1) % 3 {
        return Err(CompileError::Decode(format!("displacement at {pos} skips a phase")));
    }
    let cells = Dir::ALL.map(|d| l.cell(pos.col, pos.row, d));
    for (k, cell) in cells.iter().enumerate() {
        if let Some(i) = *cell {
            sheet.times[i] += if forward { 1 } else { -1 };
            sheet.values[i] = if forward { new.output[k] } else { old.input[k] };
        }
    }
    Ok(cells)
}

pub(crate) fn read_bca2d<S: Scalar>(c: &Construction<S>, a: &Assembly) -> Result<Readout, CompileError> {
    let sheet = extract_time_sheet(c, a)?;
    let arrows = decode_bca2d(c, a)?;
    Ok(Readout::Bca2d(Bca2dReadout { arrows, sheet }))
}

/// Outcome of comparing the tile state space with the arrow automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimulationReport {
    pub tile_states: usize,
    pub arrow_states: usize,
    pub tile_transitions: usize,
    pub truncated: bool,
    pub counterexample: Option<String>,
}

impl BisimulationReport {
    pub fn pass(&self) -> bool {
        !self.truncated && self.counterexample.is_none()
    }
}

fn arrow_moves(rule: &BlockRule2D, g: &ArrowGrid, parts: &Partitions) -> HashSet<ArrowGrid> {
    let mut out = HashSet::new();
    for (id, corners) in parts.all_blocks() {
        if g.fireable(id.parity, corners) {
            let mut n = g.clone();
            n.fire(rule, parts, *id, None).expect("fireable");
            out.insert(n);
        }
        if g.unfireable(id.parity, corners) {
            for p in g.predecessors(rule, corners) {
                let mut n = g.clone();
                n.unfire(parts, *id, p, None).expect("unfireable");
                out.insert(n);
            }
        }
    }
    out
}

/// Enumerates both state spaces up to `cap` states and checks that decoding
/// maps tile states onto arrow states and tile moves one-to-one onto the
/// arrow moves of the decoded state. Only meaningful without ball sources.
pub fn check_bca2d_bisimulation<S: Scalar>(c: &Construction<S>, cap: usize) -> Result<BisimulationReport, CompileError> {
    let m = meta_of(c)?;
    let rule = &m.spec.rule;
    let g = enumerate_state_space(&c.system, &c.initial, cap);
    let decoded: Vec<ArrowGrid> = g.states.iter().map(|a| decode_bca2d(c, a)).collect::<Result<_, _>>()?;
    let parts = decoded[0].partitions().map_err(|e| CompileError::Decode(e.to_string()))?;
    let mut report = BisimulationReport {
        tile_states: g.len(),
        arrow_states: 0,
        tile_transitions: g.edges.len(),
        truncated: g.truncated,
        counterexample: None,
    };

    let mut seen: HashSet<ArrowGrid> = HashSet::from([decoded[0].clone()]);
    let mut queue = VecDeque::from([decoded[0].clone()]);
    while let Some(a) = queue.pop_front() {
        for n in arrow_moves(rule, &a, &parts) {
            if !seen.contains(&n) {
                if seen.len() >= cap {
                    report.truncated = true;
                    continue;
                }
                seen.insert(n.clone());
                queue.push_back(n);
            }
        }
    }
    report.arrow_states = seen.len();

    let tile_set: HashSet<&ArrowGrid> = decoded.iter().collect();
    if let Some(a) = seen.iter().find(|a| !tile_set.contains(a)) {
        report.counterexample = Some(format!("arrow state not reached by tiles:\n{}", a.grid().render()));
        return Ok(report);
    }
    for (s, a) in decoded.iter().enumerate() {
        if !seen.contains(a) {
            report.counterexample = Some(format!("tile state {s} decodes outside the arrow state space"));
            return Ok(report);
        }
        let want = arrow_moves(rule, a, &parts);
        let got: HashSet<ArrowGrid> = g.out_edges(s).map(|e| decoded[e.to].clone()).collect();
        // Tiles also carry local time mod 3, which arrows forget; each arrow
        // move must still lift to exactly one tile move.
        if want != got || g.out_edges(s).count() != want.len() {
            report.counterexample = Some(format!(
                "state {s}: {} arrow moves, {} distinct tile moves",
                want.len(),
                got.len()
            ));
            return Ok(report);
        }
    }
    Ok(report)
}
