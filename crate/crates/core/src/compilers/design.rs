use std::collections::{BTreeMap, HashMap};

use crate::model::{Assembly, Dir, Pos, TileSystem};
use crate::Scalar;

use super::CompileError;

/// Tile under construction, sides N, E, S, W as `[slot_a, slot_b]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TileDef {
    pub name: String,
    pub sides: [[String; 2]; 4],
}

impl TileDef {
    pub fn new(name: impl Into<String>, n: [&str; 2], e: [&str; 2], s: [&str; 2], w: [&str; 2]) -> Self {
        let own = |p: [&str; 2]| [p[0].to_string(), p[1].to_string()];
        Self { name: name.into(), sides: [own(n), own(e), own(s), own(w)] }
    }

    pub fn side(&self, d: Dir) -> &[String; 2] {
        &self.sides[d.index()]
    }

    pub fn set_side(&mut self, d: Dir, labels: [String; 2]) {
        self.sides[d.index()] = labels;
    }

    /// Mirror image across the main diagonal: east becomes north and the
    /// two slots of every side trade places. Labels go through `rename`.
    pub fn transposed(&self, name: impl Into<String>, rename: impl Fn(&str) -> String) -> Self {
        let swap = |d: Dir| {
            let s = self.side(d);
            [rename(&s[1]), rename(&s[0])]
        };
        Self { name: name.into(), sides: [swap(Dir::E), swap(Dir::N), swap(Dir::W), swap(Dir::S)] }
    }
}

/// Keeps `-` inert and tags every other label.
pub(crate) fn suffixed(tag: &'static str) -> impl Fn(&str) -> String {
    move |l: &str| if l == "-" { l.to_string() } else { format!("{l}{tag}") }
}

/// Set of tile definitions plus their concentrations.
#[derive(Debug, Clone, Default)]
pub(crate) struct Design {
    tiles: Vec<TileDef>,
    concentrations: HashMap<String, f64>,
    strengths: BTreeMap<String, f64>,
}

impl Design {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, t: TileDef) -> &mut Self {
        if !self.tiles.iter().any(|x| x.name == t.name) {
            self.tiles.push(t);
        }
        self
    }

    pub fn tiles(&self) -> &[TileDef] {
        &self.tiles
    }

    pub fn concentration(&mut self, name: &str, c: f64) -> &mut Self {
        self.concentrations.insert(name.to_string(), c);
        self
    }

    /// Every tile transposed under its own name; concentrations carry over.
    pub fn transposed(&self, rename: impl Fn(&str) -> String) -> Self {
        Self {
            tiles: self.tiles.iter().map(|t| t.transposed(t.name.clone(), &rename)).collect(),
            concentrations: self.concentrations.clone(),
            strengths: self.strengths.clone(),
        }
    }

    /// Every non-inert label gets strength 1 unless set otherwise.
    pub fn build<S: Scalar>(&self) -> Result<TileSystem<S>, CompileError> {
        let mut labels = BTreeMap::new();
        for t in &self.tiles {
            for side in &t.sides {
                for l in side {
                    if l != "-" {
                        labels.insert(l.clone(), *self.strengths.get(l).unwrap_or(&1.0));
                    }
                }
            }
        }
        let mut b = TileSystem::<S>::builder();
        for (l, e) in &labels {
            b = b.strength(l, S::of(*e));
        }
        for t in &self.tiles {
            b = b.tile_owned(t.name.clone(), t.sides.clone());
            if let Some(&c) = self.concentrations.get(&t.name) {
                b = b.concentration(&t.name, S::of(c));
            }
        }
        Ok(b.build()?)
    }
}

/// Grid of tile names, row 0 at the south.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub width: usize,
    pub height: usize,
    cells: Vec<String>,
}

impl Layout {
    pub fn new(width: usize, height: usize, fill: &str) -> Self {
        Self { width, height, cells: vec![fill.to_string(); width * height] }
    }

    pub fn set(&mut self, col: usize, row: usize, name: impl Into<String>) {
        self.cells[row * self.width + col] = name.into();
    }

    pub fn get(&self, col: usize, row: usize) -> &str {
        &self.cells[row * self.width + col]
    }

    pub fn transposed(&self, rename: impl Fn(&str) -> String) -> Self {
        let mut t = Layout::new(self.height, self.width, "");
        for row in 0..self.height {
            for col in 0..self.width {
                t.set(row, col, rename(self.get(col, row)));
            }
        }
        t
    }

    pub fn assemble<S: Scalar>(&self, system: &TileSystem<S>) -> Result<Assembly, CompileError> {
        let mut cells = Vec::with_capacity(self.cells.len());
        for name in &self.cells {
            cells.push(system.require_tile(name)?);
        }
        Ok(Assembly::from_cells(self.width, self.height, cells)?)
    }
}

pub(crate) fn pos(col: usize, row: usize) -> Pos {
    Pos::new(col, row)
}
