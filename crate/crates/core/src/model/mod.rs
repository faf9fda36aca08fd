//! The single-assembly tile displacement model.

mod assembly;
mod displacement;
mod geometry;
mod system;

pub use assembly::Assembly;
pub use displacement::{
    apply_reaction, apply_reaction_in_place, audit_warnings, bond_energy, closed_toehold_count,
    enumerate_reactions, free_energy, reverse_of, toehold_status, validate_displacement,
    validate_named, Failure, Reaction, SlotBond, ToeholdStatus, Validity, Warning,
};
pub(crate) use displacement::{evaluate, for_each_outcome};
pub use geometry::{Dir, Pos, Slot, SlotRef};
pub use system::{Label, Side, TileId, TileSystem, TileSystemBuilder, TileType, INERT};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("position {0} is outside the assembly")]
    OutOfBounds(Pos),
    #[error("unknown tile type `{0}`")]
    UnknownTile(String),
    #[error("unknown toehold label `{0}` on tile `{1}`")]
    UnknownLabel(String, String),
    #[error("toehold label `{0}` declared twice")]
    DuplicateLabel(String),
    #[error("tile type `{0}` declared twice")]
    DuplicateTile(String),
    #[error("invalid tile name `{0}`")]
    BadTileName(String),
    #[error("bond strength of `{0}` must be positive and finite")]
    BadStrength(String),
    #[error("concentration of `{0}` must be finite and non-negative")]
    BadConcentration(String),
    #[error("rate constant must be positive")]
    BadRateConstant,
    #[error("reference concentration must be positive")]
    BadReferenceConcentration,
    #[error("too many tile types ({0})")]
    TooManyTiles(usize),
    #[error("assemblies must have at least one cell")]
    EmptyAssembly,
    #[error("grid {width}x{height} does not match {cells} cells")]
    ShapeMismatch { width: usize, height: usize, cells: usize },
    #[error("tile index {0} does not belong to the system")]
    ForeignTile(usize),
    #[error("tile `{0}` has zero concentration, so its chemical potential is undefined")]
    UndefinedChemicalPotential(String),
    #[error("reaction at {0} is no longer valid")]
    StaleReaction(Pos),
}
