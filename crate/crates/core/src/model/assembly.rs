use super::geometry::{Dir, Pos};
use super::system::{TileId, TileSystem};
use super::ModelError;
use crate::scalar::Scalar;

/// Full rectangular grid of tiles. Row 0 is the southern edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assembly {
    width: usize,
    height: usize,
    cells: Vec<TileId>,
}

impl Assembly {
    pub fn filled(width: usize, height: usize, tile: TileId) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::EmptyAssembly);
        }
        Ok(Assembly { width, height, cells: vec![tile; width * height] })
    }

    /// Builds from row-major cells, row 0 first.
    pub fn from_cells(width: usize, height: usize, cells: Vec<TileId>) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::EmptyAssembly);
        }
        if cells.len() != width * height {
            return Err(ModelError::ShapeMismatch { width, height, cells: cells.len() });
        }
        Ok(Assembly { width, height, cells })
    }

    /// Builds from tile names; `rows[0]` is row 0 (south).
    pub fn from_names<S: Scalar>(
        system: &TileSystem<S>,
        rows: &[Vec<&str>],
    ) -> Result<Self, ModelError> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let mut cells = Vec::with_capacity(width * height);
        for row in rows {
            if row.len() != width {
                return Err(ModelError::ShapeMismatch { width, height, cells: row.len() });
            }
            for name in row {
                cells.push(system.require_tile(name)?);
            }
        }
        Self::from_cells(width, height, cells)
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

    pub fn cells(&self) -> &[TileId] {
        &self.cells
    }

    pub fn contains(&self, pos: Pos) -> bool {
        pos.col < self.width && pos.row < self.height
    }

    pub fn index_of(&self, pos: Pos) -> usize {
        pos.row * self.width + pos.col
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index % self.width, index / self.width)
    }

    pub fn get(&self, pos: Pos) -> TileId {
        self.cells[self.index_of(pos)]
    }

    pub fn try_get(&self, pos: Pos) -> Result<TileId, ModelError> {
        if self.contains(pos) {
            Ok(self.get(pos))
        } else {
            Err(ModelError::OutOfBounds(pos))
        }
    }

    pub fn set(&mut self, pos: Pos, tile: TileId) {
        let i = self.index_of(pos);
        self.cells[i] = tile;
    }

    pub fn neighbor(&self, pos: Pos, dir: Dir) -> Option<Pos> {
        let (dc, dr) = dir.delta();
        let col = pos.col.checked_add_signed(dc)?;
        let row = pos.row.checked_add_signed(dr)?;
        let p = Pos::new(col, row);
        self.contains(p).then_some(p)
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.cells.len()).map(|i| self.pos_of(i))
    }

    /// Every cell refers to a tile of `system`.
    pub fn check_against<S: Scalar>(&self, system: &TileSystem<S>) -> Result<(), ModelError> {
        match self.cells.iter().find(|t| t.index() >= system.tile_count()) {
            Some(t) => Err(ModelError::ForeignTile(t.index())),
            None => Ok(()),
        }
    }

    /// Tile names, one row per line, northern row first.
    pub fn render_names<S: Scalar>(&self, system: &TileSystem<S>) -> String {
        let mut out = String::new();
        for row in (0..self.height).rev() {
            let names: Vec<&str> = (0..self.width)
                .map(|c| system.name(self.get(Pos::new(c, row))))
                .collect();
            out.push_str(&names.join(" "));
            out.push('\n');
        }
        out
    }
}
