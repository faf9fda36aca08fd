use std::collections::{BTreeSet, HashSet};

use crate::blockca::{BlockRule1D, Symbol};
use crate::model::{Assembly, TileId};
use crate::Scalar;

use super::circuit::{CircuitSpec, GateKind};
use super::design::{Design, Layout, TileDef};
use super::{Bias, CellTag, CompileError, Construction, Meta};

/// Forward bias used by driven constructions unless told otherwise.
pub const DEFAULT_R: f64 = 10.0;

/// Streams feeding a 1D block automaton laid out as a tile array: row `j`
/// (from 1) reads `left[j - 1]`, column `i` reads `bottom[i - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bca1dInputs {
    pub left: Vec<Symbol>,
    pub bottom: Vec<Symbol>,
}

impl Bca1dInputs {
    /// Every pair of streams of the given lengths over `n` symbols.
    pub fn exhaustive(n: usize, rows: usize, cols: usize) -> Result<Vec<Self>, CompileError> {
        let total = (n as f64).powi((rows + cols) as i32);
        if n == 0 || total > (1u64 << 24) as f64 {
            return Err(CompileError::BadSize(format!("{total} input combinations")));
        }
        let digits = |mut v: usize, len: usize| -> Vec<Symbol> {
            (0..len)
                .map(|_| {
                    let d = v % n;
                    v /= n;
                    d as Symbol
                })
                .collect()
        };
        let per_side = n.pow(rows as u32);
        Ok((0..total as usize)
            .map(|v| Self { left: digits(v % per_side, rows), bottom: digits(v / per_side, cols) })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bca1dMeta {
    /// Rule cells per row and per column.
    pub cols: usize,
    pub rows: usize,
    /// Rule tile id to `(x, y, f, g)`.
    pub rule_tiles: Vec<(TileId, [Symbol; 4])>,
}

fn v(s: Symbol) -> String {
    format!("v{s}")
}

fn check_symbols(n: usize, s: &[Symbol]) -> Result<(), CompileError> {
    match s.iter().find(|&&x| x as usize >= n) {
        Some(x) => Err(CompileError::BadRule(format!("symbol {x} outside alphabet of size {n}"))),
        None => Ok(()),
    }
}

/// Space-time history of `rule` as a tile array. The rule tile at `(i, j)`
/// reads `x` from its west neighbour and `y` from its south neighbour and
/// passes `f` north and `g` east; it can only replace the blank once both
/// of those neighbours hold rule or input tiles. Rule and input tiles sit at
/// `rule_concentration`, the blank at `rule_concentration / r`.
pub fn compile_bca1d<S: Scalar>(
    rule: &BlockRule1D,
    inputs: &Bca1dInputs,
    bias: Bias,
) -> Result<Construction<S>, CompileError> {
    let n = rule.alphabet();
    check_symbols(n, &inputs.left)?;
    check_symbols(n, &inputs.bottom)?;
    if !(bias.r > 0.0) || !(bias.rule_concentration > 0.0) {
        return Err(CompileError::BadSize(format!("bias r = {}, c = {}", bias.r, bias.rule_concentration)));
    }
    let (rows, cols) = (inputs.left.len(), inputs.bottom.len());
    if rows == 0 || cols == 0 {
        return Err(CompileError::BadSize("empty input stream".into()));
    }
    let c = bias.rule_concentration;
    let mut d = Design::new();
    d.add(TileDef::new("corner", ["p", "p"], ["q", "q"], ["-", "-"], ["-", "-"]));
    d.add(TileDef::new("blank", ["n", "-"], ["-", "e"], ["n", "b"], ["a", "e"]));
    for s in 0..n as Symbol {
        d.add(TileDef::new(format!("left{s}"), ["p", "p"], ["a", &v(s)], ["p", "p"], ["-", "-"]));
        d.add(TileDef::new(format!("bottom{s}"), [&v(s), "b"], ["q", "q"], ["-", "-"], ["q", "q"]));
    }
    let mut rule_names = Vec::new();
    for x in 0..n as Symbol {
        for y in 0..n as Symbol {
            let (f, g) = rule.apply(x, y);
            let name = format!("rule{x}{y}");
            d.add(TileDef::new(name.clone(), [&v(f), "b"], ["a", &v(g)], [&v(y), "-"], ["-", &v(x)]));
            rule_names.push((name, [x, y, f, g]));
        }
    }
    let names: Vec<String> = d.tiles().iter().map(|t| t.name.clone()).collect();
    for name in names {
        d.concentration(&name, if name == "blank" { c / bias.r } else { c });
    }

    let (width, height) = (cols + 1, rows + 1);
    let mut layout = Layout::new(width, height, "blank");
    let mut tags = vec![CellTag::Filler; width * height];
    layout.set(0, 0, "corner");
    tags[0] = CellTag::Border;
    for (j, &s) in inputs.left.iter().enumerate() {
        layout.set(0, j + 1, format!("left{s}"));
        tags[(j + 1) * width] = CellTag::Input { line: j, bit: Some(s as u8) };
    }
    for (i, &s) in inputs.bottom.iter().enumerate() {
        layout.set(i + 1, 0, format!("bottom{s}"));
        tags[i + 1] = CellTag::Input { line: rows + i, bit: Some(s as u8) };
    }
    for j in 1..height {
        for i in 1..width {
            tags[j * width + i] = CellTag::Cell { x: i, y: j };
        }
    }
    let system = d.build::<S>()?;
    let initial = layout.assemble(&system)?;
    let rule_tiles = rule_names
        .into_iter()
        .map(|(name, xyfg)| Ok((system.require_tile(&name)?, xyfg)))
        .collect::<Result<_, CompileError>>()?;
    Ok(Construction { system, initial, tags, bias, meta: Meta::Bca1d(Bca1dMeta { cols, rows, rule_tiles }) })
}

/// Rule of a block automaton transformer: the update of a cell depends on
/// its state pair `(x, y)` and a pattern pair `(p, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformerRule {
    states: usize,
    patterns: usize,
    table: Vec<(Symbol, Symbol)>,
}

impl TransformerRule {
    pub fn from_fn(
        states: usize,
        patterns: usize,
        mut f: impl FnMut(Symbol, Symbol, Symbol, Symbol) -> (Symbol, Symbol),
    ) -> Result<Self, CompileError> {
        if states == 0 || patterns == 0 || states > 64 || patterns > 64 {
            return Err(CompileError::BadRule(format!("alphabet sizes {states} and {patterns}")));
        }
        let mut table = Vec::with_capacity(states * states * patterns * patterns);
        for x in 0..states as Symbol {
            for y in 0..states as Symbol {
                for p in 0..patterns as Symbol {
                    for q in 0..patterns as Symbol {
                        let (a, b) = f(x, y, p, q);
                        if a as usize >= states || b as usize >= states {
                            return Err(CompileError::BadRule(format!("output ({a}, {b}) out of range")));
                        }
                        table.push((a, b));
                    }
                }
            }
        }
        Ok(Self { states, patterns, table })
    }

    /// A plain block rule that ignores a one-symbol pattern.
    pub fn uniform(rule: &BlockRule1D) -> Self {
        Self::from_fn(rule.alphabet(), 1, |x, y, _, _| rule.apply(x, y)).expect("valid rule")
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn patterns(&self) -> usize {
        self.patterns
    }

    pub fn apply(&self, x: Symbol, y: Symbol, p: Symbol, q: Symbol) -> (Symbol, Symbol) {
        let (n, m) = (self.states, self.patterns);
        self.table[((x as usize * n + y as usize) * m + p as usize) * m + q as usize]
    }

    /// Tile types before pruning: `2N + M^2 + N^2 M^2`, the terminator not
    /// included.
    pub fn tile_count(&self) -> usize {
        let (n, m) = (self.states, self.patterns);
        2 * n + m * m + n * n * m * m
    }
}

/// Pattern of a transformer over `cols x rows` rule cells. `cells[j][i]`
/// is the `(p, q)` pair of the pattern tile at column `i + 1`, row `j + 1`,
/// for `i <= cols` and `j <= rows`: one extra row and column hold pattern
/// tiles that are read but never replaced. `p` is read by the cell below
/// and `q` by the cell to the left. Pattern tiles in column 1 and row 1
/// are read by input tiles, which expect `q = 0` and `p = 0` there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternLayout {
    pub cells: Vec<Vec<(Symbol, Symbol)>>,
}

impl PatternLayout {
    pub fn uniform(cols: usize, rows: usize) -> Self {
        Self { cells: vec![vec![(0, 0); cols + 1]; rows + 1] }
    }

    /// Pattern pair that cell `(i, j)` (from 1) reads.
    pub fn read_by(&self, i: usize, j: usize) -> (Symbol, Symbol) {
        (self.cells[j][i - 1].0, self.cells[j - 1][i].1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerMeta {
    pub cols: usize,
    pub rows: usize,
    pub rule: TransformerRule,
    pub pattern: PatternLayout,
    /// Rule tile id to `(x, y, f, g)`.
    pub rule_tiles: Vec<(TileId, [Symbol; 4])>,
}

/// Which tile types a transformer construction emits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TileSelection {
    /// Every input, pattern and rule tile.
    Full,
    /// Only rule tiles that can occur for one of the listed input streams,
    /// and only pattern and input tiles of the layout.
    ReachableFrom(Vec<Bca1dInputs>),
}

/// Block automaton transformer: like [`compile_bca1d`] but the blank is
/// replaced by a layout of pattern tiles, and each rule tile must also
/// match the pattern toeholds of its north and east neighbours.
pub fn compile_bca1d_transformer<S: Scalar>(
    rule: &TransformerRule,
    pattern: &PatternLayout,
    inputs: &Bca1dInputs,
    bias: Bias,
    selection: &TileSelection,
) -> Result<Construction<S>, CompileError> {
    let (n, m) = (rule.states, rule.patterns);
    let (rows, cols) = (inputs.left.len(), inputs.bottom.len());
    if rows == 0 || cols == 0 {
        return Err(CompileError::BadSize("empty input stream".into()));
    }
    check_symbols(n, &inputs.left)?;
    check_symbols(n, &inputs.bottom)?;
    validate_pattern(pattern, cols, rows, m)?;
    if !(bias.r > 0.0) || !(bias.rule_concentration > 0.0) {
        return Err(CompileError::BadSize(format!("bias r = {}, c = {}", bias.r, bias.rule_concentration)));
    }
    let pl = |p: Symbol| format!("P{p}");
    let ql = |q: Symbol| format!("Q{q}");
    let pname = |p: Symbol, q: Symbol| format!("pattern{p}.{q}");

    let (keep_rules, keep_patterns, keep_inputs): (Option<HashSet<[Symbol; 4]>>, Option<BTreeSet<_>>, Option<BTreeSet<_>>) =
        match selection {
            TileSelection::Full => (None, None, None),
            TileSelection::ReachableFrom(list) => {
                let mut rules = HashSet::new();
                let mut ins = BTreeSet::new();
                for s in list.iter().chain(std::iter::once(inputs)) {
                    if s.left.len() != rows || s.bottom.len() != cols {
                        return Err(CompileError::BadSize("input streams of different shapes".into()));
                    }
                    check_symbols(n, &s.left)?;
                    check_symbols(n, &s.bottom)?;
                    ins.extend(s.left.iter().map(|&x| (0, x)));
                    ins.extend(s.bottom.iter().map(|&x| (1, x)));
                    for (_, _, key) in transformer_cells(rule, pattern, s) {
                        rules.insert(key);
                    }
                }
                let pats = pattern.cells.iter().flatten().copied().collect();
                (Some(rules), Some(pats), Some(ins))
            }
        };

    let c = bias.rule_concentration;
    let mut d = Design::new();
    d.add(TileDef::new("terminator", ["t", "t"], ["u", "u"], ["t", "t"], ["u", "u"]));
    for s in 0..n as Symbol {
        if keep_inputs.as_ref().is_none_or(|k| k.contains(&(0, s))) {
            d.add(TileDef::new(format!("left{s}"), ["t", "t"], [&ql(0), &v(s)], ["t", "t"], ["-", "-"]));
        }
        if keep_inputs.as_ref().is_none_or(|k| k.contains(&(1, s))) {
            d.add(TileDef::new(format!("bottom{s}"), [&v(s), &pl(0)], ["u", "u"], ["-", "-"], ["u", "u"]));
        }
    }
    for p in 0..m as Symbol {
        for q in 0..m as Symbol {
            if keep_patterns.as_ref().is_none_or(|k| k.contains(&(p, q))) {
                d.add(TileDef::new(pname(p, q), ["n", "-"], ["-", "e"], ["n", &pl(p)], [&ql(q), "e"]));
                d.concentration(&pname(p, q), c / bias.r);
            }
        }
    }
    let mut rule_names = Vec::new();
    for x in 0..n as Symbol {
        for y in 0..n as Symbol {
            for p in 0..m as Symbol {
                for q in 0..m as Symbol {
                    if keep_rules.as_ref().is_some_and(|k| !k.contains(&[x, y, p, q])) {
                        continue;
                    }
                    let (f, g) = rule.apply(x, y, p, q);
                    let name = format!("rule{x}.{y}.{p}.{q}");
                    d.add(TileDef::new(name.clone(), [&v(f), &pl(p)], [&ql(q), &v(g)], [&v(y), "-"], ["-", &v(x)]));
                    d.concentration(&name, c);
                    rule_names.push((name, [x, y, f, g]));
                }
            }
        }
    }
    for t in ["terminator"]
        .into_iter()
        .map(String::from)
        .chain((0..n).flat_map(|s| [format!("left{s}"), format!("bottom{s}")]))
    {
        d.concentration(&t, c);
    }

    let (width, height) = (cols + 2, rows + 2);
    let mut layout = Layout::new(width, height, "terminator");
    let mut tags = vec![CellTag::Border; width * height];
    for (j, &s) in inputs.left.iter().enumerate() {
        layout.set(0, j + 1, format!("left{s}"));
        tags[(j + 1) * width] = CellTag::Input { line: j, bit: Some(s as u8) };
    }
    for (i, &s) in inputs.bottom.iter().enumerate() {
        layout.set(i + 1, 0, format!("bottom{s}"));
        tags[i + 1] = CellTag::Input { line: rows + i, bit: Some(s as u8) };
    }
    for j in 1..height {
        for i in 1..width {
            let (p, q) = pattern.cells[j - 1][i - 1];
            layout.set(i, j, pname(p, q));
            tags[j * width + i] =
                if i <= cols && j <= rows { CellTag::Cell { x: i, y: j } } else { CellTag::Border };
        }
    }
    let system = d.build::<S>()?;
    let initial = layout.assemble(&system)?;
    let rule_tiles = rule_names
        .into_iter()
        .map(|(name, xyfg)| Ok((system.require_tile(&name)?, xyfg)))
        .collect::<Result<_, CompileError>>()?;
    Ok(Construction {
        system,
        initial,
        tags,
        bias,
        meta: Meta::Transformer(TransformerMeta { cols, rows, rule: rule.clone(), pattern: pattern.clone(), rule_tiles }),
    })
}

fn validate_pattern(pattern: &PatternLayout, cols: usize, rows: usize, m: usize) -> Result<(), CompileError> {
    if pattern.cells.len() != rows + 1 || pattern.cells.iter().any(|r| r.len() != cols + 1) {
        return Err(CompileError::BadPattern(format!("pattern must be {} x {}", cols + 1, rows + 1)));
    }
    for row in &pattern.cells {
        for &(p, q) in row {
            if p as usize >= m || q as usize >= m {
                return Err(CompileError::BadPattern(format!("pattern pair ({p}, {q}) outside {m} symbols")));
            }
        }
    }
    if pattern.cells.iter().any(|r| r[0].1 != 0) || pattern.cells[0].iter().any(|&(p, _)| p != 0) {
        return Err(CompileError::BadPattern("column 1 needs q = 0 and row 1 needs p = 0".into()));
    }
    Ok(())
}

/// Every rule cell with the key `[x, y, p, q]` it computes for `inputs`.
fn transformer_cells(
    rule: &TransformerRule,
    pattern: &PatternLayout,
    inputs: &Bca1dInputs,
) -> Vec<(usize, usize, [Symbol; 4])> {
    let (rows, cols) = (inputs.left.len(), inputs.bottom.len());
    let mut north = inputs.bottom.clone();
    let mut out = Vec::with_capacity(rows * cols);
    for j in 1..=rows {
        let mut x = inputs.left[j - 1];
        for i in 1..=cols {
            let (p, q) = pattern.read_by(i, j);
            let y = north[i - 1];
            out.push((i, j, [x, y, p, q]));
            let (f, g) = rule.apply(x, y, p, q);
            north[i - 1] = f;
            x = g;
        }
    }
    out
}

/// Reference evaluation of a transformer: `(f, g)` of every rule cell,
/// indexed `[j - 1][i - 1]`.
pub fn evaluate_transformer(
    rule: &TransformerRule,
    pattern: &PatternLayout,
    inputs: &Bca1dInputs,
) -> Vec<Vec<(Symbol, Symbol)>> {
    let (rows, cols) = (inputs.left.len(), inputs.bottom.len());
    let mut out = vec![vec![(0, 0); cols]; rows];
    for (i, j, [x, y, p, q]) in transformer_cells(rule, pattern, inputs) {
        out[j - 1][i - 1] = rule.apply(x, y, p, q);
    }
    out
}

/// A circuit recast as a transformer. Pattern symbol 0 marks cells outside
/// the circuit and symbol `k + 1` the `k`-th gate kind of the circuit's
/// family; a cell computes gate `k` when both pattern toeholds it reads
/// name `k`. States are bits; `f` is the north output and `g` the east one.
pub fn circuit_transformer(spec: &CircuitSpec) -> Result<(TransformerRule, PatternLayout, Bca1dInputs), CompileError> {
    spec.validate()?;
    let kinds: Vec<GateKind> = spec.family.kinds().to_vec();
    let m = kinds.len() + 1;
    let rule = TransformerRule::from_fn(2, m, |x, y, p, q| {
        if p == q && p > 0 {
            let (e, n) = kinds[p as usize - 1].outputs(x as u8, y as u8);
            (n as Symbol, e as Symbol)
        } else {
            (y, x)
        }
    })?;
    let (rows, cols) = (spec.rows(), spec.cols());
    let code = |i: usize, j: usize| -> Symbol {
        // Gate at rule cell (i, j), both from 1.
        if (1..=cols).contains(&i) && (1..=rows).contains(&j) {
            kinds.iter().position(|&k| k == spec.gates[j - 1][i - 1]).expect("validated") as Symbol + 1
        } else {
            0
        }
    };
    let mut cells = vec![vec![(0, 0); cols + 1]; rows + 1];
    for (j, row) in cells.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            // Pattern tile at (i + 1, j + 1): p for the cell below, q for
            // the cell to the left.
            *cell = (code(i + 1, j), code(i, j + 1));
        }
    }
    let inputs = Bca1dInputs {
        left: spec.west_inputs.iter().map(|&b| b as Symbol).collect(),
        bottom: spec.south_inputs.iter().map(|&b| b as Symbol).collect(),
    };
    Ok((rule, PatternLayout { cells }, inputs))
}

/// Decoded rule cells of a 1D automaton or transformer assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Bca1dReadout {
    /// `(x, y, f, g)` of the rule tile at `(i, j)`, indexed `[j - 1][i - 1]`;
    /// `None` where the cell has not updated.
    pub cells: Vec<Vec<Option<[Symbol; 4]>>>,
    /// Fraction of rule cells updated.
    pub completeness: f64,
}

impl Bca1dReadout {
    /// The streamed history started from an empty row, without row 0 and
    /// as far as the assembly determines it: entry `t` is history row
    /// `t + 1`, made of the outputs of the cells with `i + j = t + 1`.
    pub fn history(&self, inputs: &Bca1dInputs) -> Vec<Vec<Option<Symbol>>> {
        let rows = self.cells.len();
        let cols = self.cells.first().map_or(0, Vec::len);
        let steps = rows.min(cols);
        let mut out = Vec::new();
        for t in 0..steps {
            let mut row = vec![inputs.left.get(t).copied()];
            for k in 0..t {
                let (i, j) = (1 + k, t - k);
                let cell = self.cells[j - 1][i - 1];
                row.push(cell.map(|c| c[2]));
                row.push(cell.map(|c| c[3]));
            }
            row.push(inputs.bottom.get(t).copied());
            out.push(row);
        }
        out
    }
}

pub(crate) fn read_rule_cells(
    assembly: &Assembly,
    cols: usize,
    rows: usize,
    rule_tiles: &[(TileId, [Symbol; 4])],
) -> Bca1dReadout {
    let width = assembly.width();
    let mut done = 0;
    let cells = (1..=rows)
        .map(|j| {
            (1..=cols)
                .map(|i| {
                    let t = assembly.cells()[j * width + i];
                    let hit = rule_tiles.iter().find(|(id, _)| *id == t).map(|(_, k)| *k);
                    done += hit.is_some() as usize;
                    hit
                })
                .collect()
        })
        .collect();
    Bca1dReadout { cells, completeness: done as f64 / (rows * cols) as f64 }
}
