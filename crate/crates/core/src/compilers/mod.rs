//! Compilers from wires, circuits and block automata to tile displacement
//! systems, plus readout of the resulting assemblies.

mod bca1d;
mod bca2d;
mod circuit;
mod design;
mod wire;

pub use circuit::{
    compile_circuit, mixed_circuit_9x9, xor_array, CircuitMeta, CircuitReadout, CircuitSpec, CircuitValues,
    GateFamily, GateKind, BASE_TILE_TYPES, TILE_TYPES_PER_GATE,
};
pub use bca1d::{
    circuit_transformer, compile_bca1d, compile_bca1d_transformer, evaluate_transformer, Bca1dInputs, Bca1dMeta,
    Bca1dReadout, PatternLayout, TileSelection, TransformerMeta, TransformerRule, DEFAULT_R,
};
pub use bca2d::{
    check_bca2d_bisimulation, compile_bca2d, decode_bca2d, entropic_spec, extract_time_sheet,
    extract_time_sheet_near, track_time_sheet, walled_spec, Bca2dLayout, Bca2dMeta, Bca2dReadout, Bca2dSpec,
    Bca2dTile, BisimulationReport, CellRect, Region, ENTROPIC_GAS_AREAS,
};
pub use wire::{compile_naive_wire_cross, compile_wire, CrossWarning, Heading, WireKind};

use crate::model::{Assembly, ModelError, TileId, TileSystem};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("invalid size: {0}")]
    BadSize(String),
    #[error("unroutable circuit: {0}")]
    Unroutable(String),
    #[error("malformed pattern: {0}")]
    BadPattern(String),
    #[error("incompatible grid: {0}")]
    BadGrid(String),
    #[error("rule mismatch: {0}")]
    BadRule(String),
    #[error("undecodable assembly: {0}")]
    Decode(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Semantic role of one cell of the initial assembly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CellTag {
    Filler,
    Border,
    Top,
    Bottom,
    Input { line: usize, bit: Option<u8> },
    Wire { line: usize, index: usize },
    Gate { row: usize, col: usize },
    Cap { line: usize },
    /// Rule cell of a block automaton array, from 1.
    Cell { x: usize, y: usize },
    /// Block of a 2D automaton, by partition and south-west corner.
    Block { parity: u8, x: i64, y: i64 },
}

/// Concentration parameters of a construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bias {
    /// Ratio of rule to blank concentration; 1 means unbiased.
    pub r: f64,
    pub rule_concentration: f64,
}

impl Bias {
    pub fn neutral() -> Self {
        Self { r: 1.0, rule_concentration: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMeta {
    pub kind: WireKind,
    pub heading: Heading,
    pub length: usize,
    pub bit: u8,
    pub signal_tiles: Vec<TileId>,
}

/// Construction-specific readout metadata.
#[derive(Debug, Clone, PartialEq)]
pub enum Meta {
    Wire(WireMeta),
    WireCross { arm: usize },
    Circuit(CircuitMeta),
    Bca1d(Bca1dMeta),
    Transformer(TransformerMeta),
    Bca2d(Bca2dMeta),
}

/// A compiled tile system with its initial assembly and the interpretation
/// of every cell.
#[derive(Debug, Clone)]
pub struct Construction<S: Scalar = f64> {
    pub system: TileSystem<S>,
    pub initial: Assembly,
    /// One tag per cell, row-major from the south row.
    pub tags: Vec<CellTag>,
    pub bias: Bias,
    pub meta: Meta,
}

/// Logical content decoded from an assembly.
#[derive(Debug, Clone, PartialEq)]
pub enum Readout {
    /// Cells of the wire holding signal (or latch) tiles, counted from the
    /// input, and the carried bit when binary.
    Wire { front: usize, bit: Option<u8> },
    Cross { completed: bool },
    Circuit(CircuitReadout),
    Bca1d(Bca1dReadout),
    Bca2d(Bca2dReadout),
}

pub fn readout<S: Scalar>(c: &Construction<S>, assembly: &Assembly) -> Result<Readout, CompileError> {
    if assembly.width() != c.initial.width() || assembly.height() != c.initial.height() {
        return Err(CompileError::Decode("assembly shape differs from the construction".into()));
    }
    assembly.check_against(&c.system)?;
    match &c.meta {
        Meta::Wire(m) => {
            let mut front = 0;
            for (i, tag) in c.tags.iter().enumerate() {
                if let CellTag::Wire { index, .. } = tag {
                    if m.signal_tiles.contains(&assembly.cells()[i]) {
                        front = front.max(*index);
                    }
                }
            }
            let bit = (m.kind == WireKind::Latching).then_some(m.bit);
            Ok(Readout::Wire { front, bit })
        }
        Meta::WireCross { .. } => {
            let gate = c.system.require_tile("gate")?;
            Ok(Readout::Cross { completed: assembly.cells().contains(&gate) })
        }
        Meta::Circuit(m) => Ok(Readout::Circuit(circuit::read_circuit(c, m, assembly)?)),
        Meta::Bca1d(m) => Ok(Readout::Bca1d(bca1d::read_rule_cells(assembly, m.cols, m.rows, &m.rule_tiles))),
        Meta::Transformer(m) => {
            Ok(Readout::Bca1d(bca1d::read_rule_cells(assembly, m.cols, m.rows, &m.rule_tiles)))
        }
        Meta::Bca2d(_) => bca2d::read_bca2d(c, assembly),
    }
}
