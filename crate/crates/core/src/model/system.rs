use std::collections::HashMap;

use super::geometry::{Dir, Slot};
use super::ModelError;
use crate::scalar::Scalar;

/// Name of the inert toehold: strength zero, never bonds.
pub const INERT: &str = "-";

/// Interned toehold label. Index 0 is always the inert label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub(crate) u32);

impl Label {
    pub const INERT: Label = Label(0);

    pub fn is_inert(self) -> bool {
        self.0 == 0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Index of a tile type inside its [`TileSystem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TileId(pub(crate) u16);

impl TileId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ordered pair of toeholds on one side, in global slot order.
pub type Side = [Label; 2];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileType {
    pub name: String,
    /// Indexed by [`Dir::index`].
    pub sides: [Side; 4],
}

impl TileType {
    pub fn side(&self, dir: Dir) -> Side {
        self.sides[dir.index()]
    }

    pub fn label(&self, dir: Dir, slot: Slot) -> Label {
        self.sides[dir.index()][slot.index()]
    }
}

/// Tile set, bond strengths, chemostatted concentrations and rate constant.
/// Immutable once built.
#[derive(Clone, Debug)]
pub struct TileSystem<S: Scalar = f64> {
    labels: Vec<String>,
    label_index: HashMap<String, Label>,
    strengths: Vec<S>,
    tiles: Vec<TileType>,
    tile_index: HashMap<String, TileId>,
    concentrations: Vec<S>,
    by_name: Vec<TileId>,
    /// Position of every tile in `by_name`.
    rank: Vec<u16>,
    /// Tiles carrying a label on side `d`, slot `s`, keyed by `(d * 2 + s, label)`,
    /// in name order.
    by_slot: HashMap<(u8, Label), Vec<TileId>>,
    k: S,
    c0: S,
}

impl<S: Scalar> TileSystem<S> {
    pub fn builder() -> TileSystemBuilder<S> {
        TileSystemBuilder::new()
    }

    pub fn tiles(&self) -> &[TileType] {
        &self.tiles
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn tile(&self, id: TileId) -> &TileType {
        &self.tiles[id.index()]
    }

    pub fn tile_id(&self, name: &str) -> Option<TileId> {
        self.tile_index.get(name).copied()
    }

    pub fn require_tile(&self, name: &str) -> Result<TileId, ModelError> {
        self.tile_id(name)
            .ok_or_else(|| ModelError::UnknownTile(name.to_string()))
    }

    pub fn name(&self, id: TileId) -> &str {
        &self.tiles[id.index()].name
    }

    /// Tile ids sorted by name; the canonical enumeration order.
    pub fn ids_by_name(&self) -> &[TileId] {
        &self.by_name
    }

    pub(crate) fn name_rank(&self, id: TileId) -> u16 {
        self.rank[id.index()]
    }

    /// Tiles, in name order, whose `dir` side has `label` in `slot`.
    pub(crate) fn with_label(&self, dir: Dir, slot: usize, label: Label) -> &[TileId] {
        self.by_slot.get(&((dir.index() * 2 + slot) as u8, label)).map_or(&[], Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = TileId> + '_ {
        (0..self.tiles.len()).map(|i| TileId(i as u16))
    }

    pub fn label_name(&self, label: Label) -> &str {
        &self.labels[label.index()]
    }

    pub fn label(&self, name: &str) -> Option<Label> {
        self.label_index.get(name).copied()
    }

    /// Non-inert labels with their strengths, in interning order.
    pub fn strengths(&self) -> impl Iterator<Item = (&str, S)> + '_ {
        self.labels
            .iter()
            .zip(self.strengths.iter())
            .skip(1)
            .map(|(l, s)| (l.as_str(), *s))
    }

    pub fn strength(&self, label: Label) -> S {
        self.strengths[label.index()]
    }

    pub fn concentration(&self, id: TileId) -> S {
        self.concentrations[id.index()]
    }

    pub fn k(&self) -> S {
        self.k
    }

    pub fn c0(&self) -> S {
        self.c0
    }

    /// Rate of any displacement in which `invader` enters the assembly.
    pub fn rate(&self, invader: TileId) -> S {
        self.k * self.concentrations[invader.index()]
    }

    /// Copy of this system with some concentrations replaced.
    pub fn with_concentrations(&self, updates: &[(&str, S)]) -> Result<Self, ModelError> {
        let mut out = self.clone();
        for (name, c) in updates {
            let id = self.require_tile(name)?;
            if !(*c >= S::zero()) || !c.is_finite() {
                return Err(ModelError::BadConcentration(name.to_string()));
            }
            out.concentrations[id.index()] = *c;
        }
        Ok(out)
    }

    /// Keeps only the listed tiles; labels no longer used are dropped.
    pub fn restricted_to(&self, keep: &[TileId]) -> Result<Self, ModelError> {
        let mut b = TileSystemBuilder::new().k(self.k).c0(self.c0);
        let mut sorted = keep.to_vec();
        sorted.sort();
        sorted.dedup();
        for id in sorted {
            let t = self.tile(id);
            for side in &t.sides {
                for l in side {
                    if !l.is_inert() {
                        b = b.strength(self.label_name(*l), self.strength(*l));
                    }
                }
            }
            let s = |d: Dir| {
                let [a, bb] = t.side(d);
                [self.label_name(a).to_string(), self.label_name(bb).to_string()]
            };
            b = b.tile_owned(t.name.clone(), [s(Dir::N), s(Dir::E), s(Dir::S), s(Dir::W)]);
            b = b.concentration(&t.name, self.concentration(id));
        }
        b.build()
    }
}

/// Incremental constructor for a [`TileSystem`].
#[derive(Clone, Debug)]
pub struct TileSystemBuilder<S: Scalar = f64> {
    strengths: Vec<(String, S)>,
    tiles: Vec<(String, [[String; 2]; 4])>,
    concentrations: Vec<(String, S)>,
    default_concentration: S,
    k: S,
    c0: S,
}

impl<S: Scalar> Default for TileSystemBuilder<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> TileSystemBuilder<S> {
    pub fn new() -> Self {
        TileSystemBuilder {
            strengths: Vec::new(),
            tiles: Vec::new(),
            concentrations: Vec::new(),
            default_concentration: S::one(),
            k: S::one(),
            c0: S::one(),
        }
    }

    /// Declares (or redeclares) a toehold strength.
    pub fn strength(mut self, label: &str, e: S) -> Self {
        if let Some(slot) = self.strengths.iter_mut().find(|(l, _)| l == label) {
            slot.1 = e;
        } else {
            self.strengths.push((label.to_string(), e));
        }
        self
    }

    /// Adds a tile; sides are given N, E, S, W as `[slot_a, slot_b]`.
    pub fn tile(self, name: &str, n: [&str; 2], e: [&str; 2], s: [&str; 2], w: [&str; 2]) -> Self {
        let own = |p: [&str; 2]| [p[0].to_string(), p[1].to_string()];
        self.tile_owned(name.to_string(), [own(n), own(e), own(s), own(w)])
    }

    pub fn tile_owned(mut self, name: String, sides: [[String; 2]; 4]) -> Self {
        self.tiles.push((name, sides));
        self
    }

    pub fn concentration(mut self, tile: &str, c: S) -> Self {
        self.concentrations.push((tile.to_string(), c));
        self
    }

    /// Concentration assigned to tiles without an explicit entry.
    pub fn default_concentration(mut self, c: S) -> Self {
        self.default_concentration = c;
        self
    }

    pub fn k(mut self, k: S) -> Self {
        self.k = k;
        self
    }

    pub fn c0(mut self, c0: S) -> Self {
        self.c0 = c0;
        self
    }

    pub fn has_tile(&self, name: &str) -> bool {
        self.tiles.iter().any(|(n, _)| n == name)
    }

    pub fn build(self) -> Result<TileSystem<S>, ModelError> {
        if !(self.k > S::zero()) || !self.k.is_finite() {
            return Err(ModelError::BadRateConstant);
        }
        if !(self.c0 > S::zero()) || !self.c0.is_finite() {
            return Err(ModelError::BadReferenceConcentration);
        }
        let mut labels = vec![INERT.to_string()];
        let mut strengths = vec![S::zero()];
        let mut label_index = HashMap::new();
        label_index.insert(INERT.to_string(), Label::INERT);
        for (name, e) in self.strengths {
            if name == INERT {
                if e != S::zero() {
                    return Err(ModelError::BadStrength(name));
                }
                continue;
            }
            if !(e > S::zero()) || !e.is_finite() {
                return Err(ModelError::BadStrength(name));
            }
            if label_index.contains_key(&name) {
                return Err(ModelError::DuplicateLabel(name));
            }
            label_index.insert(name.clone(), Label(labels.len() as u32));
            labels.push(name);
            strengths.push(e);
        }
        if self.tiles.len() > u16::MAX as usize {
            return Err(ModelError::TooManyTiles(self.tiles.len()));
        }
        let mut tiles = Vec::with_capacity(self.tiles.len());
        let mut tile_index = HashMap::new();
        for (name, sides) in self.tiles {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(ModelError::BadTileName(name));
            }
            if tile_index.contains_key(&name) {
                return Err(ModelError::DuplicateTile(name));
            }
            let mut resolved = [[Label::INERT; 2]; 4];
            for (d, side) in sides.iter().enumerate() {
                for (s, l) in side.iter().enumerate() {
                    resolved[d][s] = *label_index
                        .get(l)
                        .ok_or_else(|| ModelError::UnknownLabel(l.clone(), name.clone()))?;
                }
            }
            tile_index.insert(name.clone(), TileId(tiles.len() as u16));
            tiles.push(TileType { name, sides: resolved });
        }
        let mut concentrations = vec![self.default_concentration; tiles.len()];
        for (name, c) in self.concentrations {
            let id = *tile_index
                .get(&name)
                .ok_or_else(|| ModelError::UnknownTile(name.clone()))?;
            if !(c >= S::zero()) || !c.is_finite() {
                return Err(ModelError::BadConcentration(name));
            }
            concentrations[id.index()] = c;
        }
        if concentrations.iter().any(|c| !(*c >= S::zero()) || !c.is_finite()) {
            return Err(ModelError::BadConcentration("<default>".into()));
        }
        let mut by_name: Vec<TileId> = (0..tiles.len()).map(|i| TileId(i as u16)).collect();
        by_name.sort_by(|a, b| tiles[a.index()].name.cmp(&tiles[b.index()].name));
        let mut rank = vec![0u16; tiles.len()];
        let mut by_slot: HashMap<(u8, Label), Vec<TileId>> = HashMap::new();
        for (r, id) in by_name.iter().enumerate() {
            rank[id.index()] = r as u16;
            for (d, side) in tiles[id.index()].sides.iter().enumerate() {
                for (s, l) in side.iter().enumerate() {
                    if !l.is_inert() {
                        by_slot.entry(((d * 2 + s) as u8, *l)).or_default().push(*id);
                    }
                }
            }
        }
        Ok(TileSystem {
            labels,
            label_index,
            strengths,
            tiles,
            tile_index,
            concentrations,
            by_name,
            rank,
            by_slot,
            k: self.k,
            c0: self.c0,
        })
    }
}
