//! Reference block cellular automata: synchronous 1D and 2D engines, the
//! arrow-augmented asynchronous update and time sheets.

mod arrows;
mod bca1d;
mod grid;
mod rule;

pub use arrows::{
    async_run2d, check_async_sync_equivalence, complete_to, sheet_is_consistent, ArrowGrid,
    Counterexample, EquivalenceReport, Fault, Schedule, TimeSheet,
};
pub use bca1d::{run_bca1d, Boundary1D};
pub use grid::{run_bca2d, step_bca2d, BlockId, Boundary2D, Grid2D, Partitions};
pub use rule::{
    bbm_rule, critters_rule, invert_rule2d, parse_rule, parse_rule1d, parse_rule2d,
    reflect_vertical_axis, rotate_cw, Block, BlockRule1D, BlockRule2D, BoundaryRule, Inversion,
    RuleFile, Symbol, NE, NW, SE, SW,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlockcaError {
    #[error("alphabet size {0} not in 1..=64")]
    BadAlphabet(usize),
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: Symbol, alphabet: usize },
    #[error("periodic 1D array needs even length, got {0}")]
    OddLength(usize),
    #[error("input streams too short: need {needed}, have left {left}, right {right}")]
    ShortStream { needed: usize, left: usize, right: usize },
    #[error("periodic grid needs even non-zero dimensions, got {width}x{height}")]
    OddDimensions { width: usize, height: usize },
    #[error("masked grids need bounded boundaries")]
    MaskedPeriodic,
    #[error("rows or mask do not match the grid shape")]
    Ragged,
    #[error("no block {0:?} in this grid")]
    NoSuchBlock(BlockId),
    #[error("block {0:?} is not fireable")]
    NotFireable(BlockId),
    #[error("could not bring every cell to local time {0}")]
    Incomplete(i64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
