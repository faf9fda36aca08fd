use std::fmt;
use std::str::FromStr;

use crate::model::{Assembly, Dir};
use crate::Scalar;

use super::design::{suffixed, Design, Layout, TileDef};
use super::{Bias, CellTag, CompileError, Construction, Meta};

/// Gate function: west input `b` and south input `c` give the east and the
/// north outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Xor,
    Nand,
    Nor,
    /// NAND to the north, XOR to the east.
    NandXor,
    /// West input to the east, south input to the north.
    WireCross,
    /// South input to the east, west input to the north.
    WirePass,
    /// Copies the west input to both outputs.
    Fanout,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::Xor,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::NandXor,
        GateKind::WireCross,
        GateKind::WirePass,
        GateKind::Fanout,
    ];

    /// `(east, north)` for west input `b` and south input `c`.
    pub fn outputs(self, b: u8, c: u8) -> (u8, u8) {
        let nand = 1 - (b & c);
        let nor = 1 - (b | c);
        match self {
            GateKind::Xor => (b ^ c, b ^ c),
            GateKind::Nand => (nand, nand),
            GateKind::Nor => (nor, nor),
            GateKind::NandXor => (b ^ c, nand),
            GateKind::WireCross => (b, c),
            GateKind::WirePass => (c, b),
            GateKind::Fanout => (b, b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Xor => "XOR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::NandXor => "NANDXOR",
            GateKind::WireCross => "WIRECROSS",
            GateKind::WirePass => "WIREPASS",
            GateKind::Fanout => "FANOUT",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = CompileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.to_ascii_uppercase().replace(['/', '_', '-'], "");
        GateKind::ALL
            .into_iter()
            .find(|k| k.name() == up)
            .ok_or_else(|| CompileError::BadPattern(format!("unknown gate kind `{s}`")))
    }
}

/// The gate kinds a tile set supports. Every kind costs nine tile types on
/// top of a 21-type base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateFamily(Vec<GateKind>);

pub const BASE_TILE_TYPES: usize = 21;
pub const TILE_TYPES_PER_GATE: usize = 9;

impl GateFamily {
    pub fn new(kinds: impl IntoIterator<Item = GateKind>) -> Self {
        let mut v: Vec<GateKind> = kinds.into_iter().collect();
        v.sort();
        v.dedup();
        Self(v)
    }

    /// XOR, NOR, NAND/XOR, WIRECROSS and WIREPASS.
    pub fn five_gate() -> Self {
        Self::new([GateKind::Xor, GateKind::Nor, GateKind::NandXor, GateKind::WireCross, GateKind::WirePass])
    }

    pub fn with_fanout() -> Self {
        let mut k = Self::five_gate().0;
        k.push(GateKind::Fanout);
        Self::new(k)
    }

    /// The FANOUT family without the redundant XOR and NAND/XOR gates.
    pub fn minimal() -> Self {
        Self::new([GateKind::Nor, GateKind::WireCross, GateKind::WirePass, GateKind::Fanout])
    }

    pub fn kinds(&self) -> &[GateKind] {
        &self.0
    }

    pub fn contains(&self, k: GateKind) -> bool {
        self.0.contains(&k)
    }

    pub fn tile_count(&self) -> usize {
        BASE_TILE_TYPES + TILE_TYPES_PER_GATE * self.0.len()
    }
}

/// Rectangular feedforward circuit. `gates[j][i]` is the gate in row `j`
/// (from the south) and column `i` (from the west). Row `j` is fed from the
/// west by `west_inputs[j]`, column `i` from the south by `south_inputs[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitSpec {
    pub gates: Vec<Vec<GateKind>>,
    pub west_inputs: Vec<u8>,
    pub south_inputs: Vec<u8>,
    pub family: GateFamily,
}

/// Result of evaluating a circuit gate by gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitValues {
    /// Output of each row at the east edge.
    pub east: Vec<u8>,
    /// Output of each column at the north edge.
    pub north: Vec<u8>,
    /// `(west, south)` inputs seen by each gate, indexed like `gates`.
    pub inputs: Vec<Vec<(u8, u8)>>,
}

impl CircuitSpec {
    pub fn new(gates: Vec<Vec<GateKind>>, west_inputs: Vec<u8>, south_inputs: Vec<u8>) -> Self {
        Self { gates, west_inputs, south_inputs, family: GateFamily::five_gate() }
    }

    pub fn rows(&self) -> usize {
        self.gates.len()
    }

    pub fn cols(&self) -> usize {
        self.gates.first().map_or(0, Vec::len)
    }

    /// Same layout with different inputs.
    pub fn with_inputs(&self, west: Vec<u8>, south: Vec<u8>) -> Self {
        Self { west_inputs: west, south_inputs: south, ..self.clone() }
    }

    /// Concatenated west then south inputs.
    pub fn input_bits(&self) -> Vec<u8> {
        self.west_inputs.iter().chain(&self.south_inputs).copied().collect()
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        let (rows, cols) = (self.rows(), self.cols());
        if rows == 0 || cols == 0 {
            return Err(CompileError::Unroutable("empty gate grid".into()));
        }
        if self.gates.iter().any(|r| r.len() != cols) {
            return Err(CompileError::Unroutable("ragged gate grid".into()));
        }
        if self.west_inputs.len() != rows || self.south_inputs.len() != cols {
            return Err(CompileError::Unroutable(format!(
                "{rows}x{cols} grid needs {rows} west and {cols} south inputs, got {} and {}",
                self.west_inputs.len(),
                self.south_inputs.len()
            )));
        }
        if let Some(b) = self.input_bits().into_iter().find(|&b| b > 1) {
            return Err(CompileError::Unroutable(format!("input bit {b}")));
        }
        for row in &self.gates {
            for &g in row {
                if !self.family.contains(g) {
                    return Err(CompileError::Unroutable(format!("gate {g} not in the tile family")));
                }
            }
        }
        Ok(())
    }

    /// Direct gate-level evaluation.
    pub fn evaluate(&self) -> Result<CircuitValues, CompileError> {
        self.validate()?;
        let (rows, cols) = (self.rows(), self.cols());
        let mut north = self.south_inputs.clone();
        let mut east = vec![0; rows];
        let mut inputs = vec![vec![(0, 0); cols]; rows];
        for j in 0..rows {
            let mut w = self.west_inputs[j];
            for i in 0..cols {
                inputs[j][i] = (w, north[i]);
                let (e, n) = self.gates[j][i].outputs(w, north[i]);
                w = e;
                north[i] = n;
            }
            east[j] = w;
        }
        Ok(CircuitValues { east, north, inputs })
    }
}

/// Parses a circuit from text: one line of gate names per row, northmost
/// row first, then `west:` and `south:` lines of bits listed from the south
/// and from the west respectively. `#` starts a comment; an optional
/// `family:` line lists the supported gate kinds.
impl FromStr for CircuitSpec {
    type Err = CompileError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut rows = Vec::new();
        let (mut west, mut south, mut family) = (None, None, None);
        let bits = |s: &str| -> Result<Vec<u8>, CompileError> {
            s.chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(CompileError::BadPattern(format!("bad input bit `{c}`"))),
                })
                .collect()
        };
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("west:") {
                west = Some(bits(rest)?);
            } else if let Some(rest) = line.strip_prefix("south:") {
                south = Some(bits(rest)?);
            } else if let Some(rest) = line.strip_prefix("family:") {
                family = Some(GateFamily::new(
                    rest.split_whitespace().map(str::parse).collect::<Result<Vec<GateKind>, _>>()?,
                ));
            } else {
                rows.push(line.split_whitespace().map(str::parse).collect::<Result<Vec<GateKind>, _>>()?);
            }
        }
        rows.reverse();
        let spec = CircuitSpec {
            west_inputs: west.ok_or_else(|| CompileError::BadPattern("missing `west:` line".into()))?,
            south_inputs: south.ok_or_else(|| CompileError::BadPattern("missing `south:` line".into()))?,
            gates: rows,
            family: family.unwrap_or_else(GateFamily::five_gate),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kinds: Vec<&str> = self.family.kinds().iter().map(|k| k.name()).collect();
        writeln!(f, "family: {}", kinds.join(" "))?;
        for row in self.gates.iter().rev() {
            let names: Vec<&str> = row.iter().map(|k| k.name()).collect();
            writeln!(f, "{}", names.join(" "))?;
        }
        let bits = |v: &[u8]| v.iter().map(|b| char::from(b'0' + b)).collect::<String>();
        writeln!(f, "west: {}", bits(&self.west_inputs))?;
        writeln!(f, "south: {}", bits(&self.south_inputs))
    }
}

/// The 9x9 systolic XOR array. A single 1 on the southernmost west input
/// spreads into a Sierpinski triangle.
pub fn xor_array(n: usize) -> CircuitSpec {
    let mut west = vec![0; n];
    if n > 0 {
        west[0] = 1;
    }
    CircuitSpec::new(vec![vec![GateKind::Xor; n]; n], west, vec![0; n])
}

/// A fixed 9x9 circuit with 18 inputs and 18 outputs over the NOR, WIRECROSS,
/// WIREPASS and FANOUT family.
pub fn mixed_circuit_9x9() -> CircuitSpec {
    use GateKind::*;
    // Northmost row first, as in the text format.
    const ROWS: [&str; 9] = [
        "FO FO XC XP XP XC XC XC XC",
        "XC XP FO XP FO NR XC XC XP",
        "XP XP NR FO FO NR XC NR NR",
        "XP NR FO XC NR FO XC XC NR",
        "FO FO XC XP XC NR NR XP NR",
        "FO XP FO XC NR XC XC NR NR",
        "FO FO FO XP NR XC NR XP XC",
        "FO NR XP NR FO XC NR XC NR",
        "XC XC NR NR NR NR XP NR NR",
    ];
    let gate = |s: &str| match s {
        "NR" => Nor,
        "XC" => WireCross,
        "XP" => WirePass,
        "FO" => Fanout,
        _ => unreachable!(),
    };
    let mut gates: Vec<Vec<GateKind>> = ROWS.iter().map(|r| r.split(' ').map(gate).collect()).collect();
    gates.reverse();
    CircuitSpec { family: GateFamily::minimal(), ..CircuitSpec::new(gates, vec![0; 9], vec![0; 9]) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitMeta {
    pub rows: usize,
    pub cols: usize,
    pub spec: CircuitSpec,
}

const PERIOD: usize = 3;

fn gate_cell(i: usize) -> usize {
    PERIOD * i + 2
}

/// Builds the gate tile family and the initial array for `spec`.
pub fn compile_circuit<S: Scalar>(spec: &CircuitSpec) -> Result<Construction<S>, CompileError> {
    spec.validate()?;
    let d = circuit_design(&spec.family);
    let (rows, cols) = (spec.rows(), spec.cols());
    let (width, height) = (PERIOD * cols + PERIOD, PERIOD * rows + PERIOD);
    let mut layout = Layout::new(width, height, "border");
    let mut tags = vec![CellTag::Border; width * height];
    let mut tag = |x: usize, y: usize, t: CellTag| tags[y * width + x] = t;
    let wire_col = |x: usize| x % PERIOD == 2;
    for y in 0..height - 1 {
        for x in 0..width - 1 {
            match (wire_col(x), wire_col(y)) {
                (false, false) => {
                    let we = if x % PERIOD == 0 { "w" } else { "e" };
                    let sn = if y % PERIOD == 0 { "s" } else { "n" };
                    layout.set(x, y, format!("filler.{sn}{we}"));
                    tag(x, y, CellTag::Filler);
                }
                (false, true) => {
                    layout.set(x, y, "wire.h");
                    tag(x, y, CellTag::Wire { line: y / PERIOD, index: x });
                }
                (true, false) => {
                    layout.set(x, y, "wire.v");
                    tag(x, y, CellTag::Wire { line: rows + x / PERIOD, index: y });
                }
                (true, true) => {
                    let (i, j) = (x / PERIOD, y / PERIOD);
                    layout.set(x, y, format!("gate.{}", spec.gates[j][i].name()));
                    tag(x, y, CellTag::Gate { row: j, col: i });
                }
            }
        }
    }
    for (j, &b) in spec.west_inputs.iter().enumerate() {
        let y = gate_cell(j);
        layout.set(0, y, format!("in{b}.h"));
        tag(0, y, CellTag::Input { line: j, bit: Some(b) });
        layout.set(width - 1, y, "cap.h");
        tag(width - 1, y, CellTag::Cap { line: j });
    }
    for (i, &c) in spec.south_inputs.iter().enumerate() {
        let x = gate_cell(i);
        layout.set(x, 0, format!("in{c}.v"));
        tag(x, 0, CellTag::Input { line: rows + i, bit: Some(c) });
        layout.set(x, height - 1, "cap.v");
        tag(x, height - 1, CellTag::Cap { line: rows + i });
    }
    let system = d.build::<S>()?;
    let initial = layout.assemble(&system)?;
    Ok(Construction {
        system,
        initial,
        tags,
        bias: Bias::neutral(),
        meta: Meta::Circuit(CircuitMeta { rows, cols, spec: spec.clone() }),
    })
}

/// Adds `t` (drawn for an eastward wire) as `name.h` and its transpose as
/// `name.v`.
fn both(d: &mut Design, t: TileDef) {
    let (h, v) = (suffixed(".h"), suffixed(".v"));
    d.add(t.transposed(format!("{}.v", t.name), &v));
    d.add(TileDef { name: format!("{}.h", t.name), ..t.map_labels(&h) });
}

/// Tile whose W and E sides come from `h` and whose S and N sides come
/// from `v` transposed; both are drawn for an eastward wire.
fn crossing(name: impl Into<String>, h: &TileDef, v: &TileDef) -> TileDef {
    let hs = h.clone().map_labels(&suffixed(".h"));
    let vs = v.transposed("", suffixed(".v"));
    let mut t = TileDef { name: name.into(), ..hs };
    t.set_side(Dir::N, vs.side(Dir::N).clone());
    t.set_side(Dir::S, vs.side(Dir::S).clone());
    t
}

fn circuit_design(family: &GateFamily) -> Design {
    let mut d = Design::new();
    both(&mut d, TileDef::new("wire", ["wn", "-"], ["-", "w"], ["ws", "-"], ["a", "w"]));
    for b in 0..2 {
        let (l, r) = (format!("l{b}"), format!("r{b}"));
        both(&mut d, TileDef::new(format!("sig{b}"), ["-", "sn"], ["a", &r], ["-", "ss"], [&l, &r]));
        both(&mut d, TileDef::new(format!("latch{b}"), ["wn", "-"], [&l, &r], ["ws", "-"], ["a", "-"]));
    }
    // Pattern tiles; they never leave solution so their concentration is 0.
    let mut pattern = Vec::new();
    for b in 0..2 {
        let r = format!("r{b}");
        both(&mut d, TileDef::new(format!("in{b}"), ["wn", "sn"], ["a", &r], ["ws", "ss"], ["-", "-"]));
        pattern.extend([format!("in{b}.h"), format!("in{b}.v")]);
    }
    // The frame label `k` is shared by both directions so that caps and the
    // border bond to each other.
    let keep_k = |tag: &'static str| move |l: &str| if l == "k" { l.to_string() } else { suffixed(tag)(l) };
    let cap = TileDef::new("cap.h", ["k", "k"], ["-", "-"], ["k", "k"], ["a", "w"]);
    d.add(cap.transposed("cap.v", keep_k(".v")));
    d.add(cap.map_labels(&keep_k(".h")));
    pattern.extend(["cap.h".to_string(), "cap.v".to_string()]);
    // Fillers named by the quadrant they sit in relative to the nearest
    // gate: `s` above a horizontal wire, `n` below one, `w` east of a
    // vertical wire, `e` west of one.
    let (h, v) = (suffixed(".h"), suffixed(".v"));
    for sn in ["s", "n"] {
        for we in ["w", "e"] {
            let (north, south) = if sn == "s" {
                (["g".to_string(), "g".to_string()], [h("wn"), h("sn")])
            } else {
                ([h("ws"), h("ss")], ["g".to_string(), "g".to_string()])
            };
            let (east, west) = if we == "w" {
                (["f".to_string(), "f".to_string()], [v("sn"), v("wn")])
            } else {
                ([v("ss"), v("ws")], ["f".to_string(), "f".to_string()])
            };
            let name = format!("filler.{sn}{we}");
            d.add(TileDef { name: name.clone(), sides: [north, east, south, west] });
            pattern.push(name);
        }
    }
    d.add(TileDef::new("border", ["k", "k"], ["k", "k"], ["k", "k"], ["k", "k"]));
    pattern.push("border".into());

    for &g in family.kinds() {
        let id = g.name();
        let gl = format!("g{id}");
        let initial = TileDef::new("", ["-", "-"], ["-", "w"], ["-", "-"], [&gl, "w"]);
        d.add(crossing(format!("gate.{id}"), &initial, &initial));
        // Initial gate tiles of different kinds would trade places freely.
        pattern.push(format!("gate.{id}"));
        for b in 0..2u8 {
            let (l, r, x) = (format!("l{b}"), format!("r{b}"), format!("x{id}{b}"));
            both(&mut d, TileDef::new(format!("tr.{id}{b}"), ["-", "sn"], [&gl, &x], ["-", "ss"], [&l, &r]));
        }
        for b in 0..2u8 {
            for c in 0..2u8 {
                let (e, n) = g.outputs(b, c);
                let west = TileDef::new("", ["-", "-"], ["a", &format!("r{e}")], ["-", "-"], ["-", &format!("x{id}{b}")]);
                let south = TileDef::new("", ["-", "-"], ["a", &format!("r{n}")], ["-", "-"], ["-", &format!("x{id}{c}")]);
                d.add(crossing(format!("gate.{id}.{b}{c}"), &west, &south));
            }
        }
    }
    for name in pattern {
        d.concentration(&name, 0.0);
    }
    d
}

/// Decoded state of a circuit assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitReadout {
    /// Latched bit at the east end of each row.
    pub east: Vec<Option<u8>>,
    /// Latched bit at the north end of each column.
    pub north: Vec<Option<u8>>,
    /// `(west, south)` inputs of every gate that has fired.
    pub gates: Vec<Vec<Option<(u8, u8)>>>,
    /// Fraction of outputs latched.
    pub completeness: f64,
}

impl CircuitReadout {
    pub fn outputs(&self) -> Option<(Vec<u8>, Vec<u8>)> {
        let e: Option<Vec<u8>> = self.east.iter().copied().collect();
        let n: Option<Vec<u8>> = self.north.iter().copied().collect();
        Some((e?, n?))
    }
}

pub(crate) fn read_circuit<S: Scalar>(
    c: &Construction<S>,
    m: &CircuitMeta,
    assembly: &Assembly,
) -> Result<CircuitReadout, CompileError> {
    let name_at = |x: usize, y: usize| c.system.name(assembly.cells()[y * assembly.width() + x]);
    let latched = |name: &str| -> Option<u8> {
        let rest = name.strip_prefix("latch")?;
        rest[..1].parse().ok()
    };
    let east: Vec<Option<u8>> = (0..m.rows).map(|j| latched(name_at(PERIOD * m.cols, gate_cell(j)))).collect();
    let north: Vec<Option<u8>> = (0..m.cols).map(|i| latched(name_at(gate_cell(i), PERIOD * m.rows))).collect();
    let gates = (0..m.rows)
        .map(|j| {
            (0..m.cols)
                .map(|i| {
                    let name = name_at(gate_cell(i), gate_cell(j));
                    let bits = name.rsplit('.').next()?.as_bytes();
                    (name.matches('.').count() == 2 && bits.len() == 2).then(|| (bits[0] - b'0', bits[1] - b'0'))
                })
                .collect()
        })
        .collect();
    let done = east.iter().chain(&north).filter(|b| b.is_some()).count();
    Ok(CircuitReadout { east, north, gates, completeness: done as f64 / (m.rows + m.cols) as f64 })
}
