//! Text and image renderings of assemblies and trajectories.

use std::fmt::Write as _;

use anyhow::{bail, Result};

use satidi::blockca::{Symbol, TimeSheet};
use satidi::compilers::{decode_bca2d, readout, track_time_sheet, CellTag, Construction, Meta, Readout};
use satidi::engine::Trajectory;
use satidi::model::{apply_reaction_in_place, validate_displacement, Assembly, TileSystem};

/// Decoded cell values, row-major from the south row. Block automata only.
pub struct ValueGrid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Option<Symbol>>,
}

impl ValueGrid {
    fn char_at(&self, x: usize, y: usize) -> char {
        match self.cells[y * self.width + x] {
            Some(v) => char::from_digit(v as u32, 36).unwrap_or('?'),
            None => '.',
        }
    }

    /// Rows north first, `.` where nothing is decoded.
    pub fn ascii(&self) -> String {
        let mut out = String::new();
        for y in (0..self.height).rev() {
            out.extend((0..self.width).map(|x| self.char_at(x, y)));
            out.push('\n');
        }
        out
    }

    /// Plain PBM; a pixel is black when its cell holds a nonzero symbol.
    pub fn pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.width, self.height);
        for y in (0..self.height).rev() {
            let row: Vec<&str> = (0..self.width)
                .map(|x| if matches!(self.cells[y * self.width + x], Some(v) if v != 0) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// 1D automata show the tile array (inputs, and each updated rule cell's
/// north output); 2D automata show the decoded cell grid.
pub fn value_grid(c: &Construction, a: &Assembly) -> Result<Option<ValueGrid>> {
    match &c.meta {
        Meta::Bca1d(_) | Meta::Transformer(_) => {
            let Readout::Bca1d(r) = readout(c, a)? else { unreachable!("1D readout") };
            let cells = c
                .tags
                .iter()
                .map(|t| match *t {
                    CellTag::Input { bit, .. } => bit.map(Symbol::from),
                    CellTag::Cell { x, y } => r.cells.get(y - 1).and_then(|row| row.get(x - 1)).copied().flatten().map(|v| v[2]),
                    _ => None,
                })
                .collect();
            Ok(Some(ValueGrid { width: a.width(), height: a.height(), cells }))
        }
        Meta::Bca2d(_) => {
            let g = decode_bca2d(c, a)?;
            let g = g.grid();
            let cells = (0..g.len()).map(|i| g.exists(i).then(|| g.get_index(i))).collect();
            Ok(Some(ValueGrid { width: g.width(), height: g.height(), cells }))
        }
        _ => Ok(None),
    }
}

pub fn ascii(c: Option<&Construction>, sys: &TileSystem, a: &Assembly) -> Result<String> {
    if let Some(c) = c {
        if let Some(g) = value_grid(c, a)? {
            return Ok(g.ascii());
        }
    }
    Ok(a.render_names(sys))
}

pub fn grid_image(c: Option<&Construction>, a: &Assembly) -> Result<String> {
    match c.map(|c| value_grid(c, a)).transpose()?.flatten() {
        Some(g) => Ok(g.pbm()),
        None => bail!("grid images need a block automaton construction"),
    }
}

fn sheet_text(sheet: &TimeSheet, c: &Construction) -> String {
    let Meta::Bca2d(m) = &c.meta else { unreachable!("2D meta") };
    let g = &m.spec.initial;
    let mut out = String::new();
    for y in (0..g.height()).rev() {
        for x in 0..g.width() {
            let i = g.index(x, y);
            out.push(if g.exists(i) { char::from_digit(sheet.values[i] as u32, 36).unwrap_or('?') } else { '.' });
        }
        out.push('\n');
    }
    out.push_str("[times]\n");
    for y in (0..g.height()).rev() {
        let row: Vec<String> = (0..g.width())
            .map(|x| {
                let i = g.index(x, y);
                if g.exists(i) { sheet.times[i].to_string() } else { ".".into() }
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Frames every `every` events, plus the final state. 2D automata frames
/// show the tracked cell values and local times; others the ascii view.
pub fn history_strip(c: Option<&Construction>, sys: &TileSystem, tr: &Trajectory, every: u64) -> Result<String> {
    if every == 0 {
        bail!("frame interval must be positive");
    }
    if tr.events.len() as u64 != tr.event_count {
        bail!("trajectory has no complete event log");
    }
    let bca2d = c.filter(|c| matches!(c.meta, Meta::Bca2d(_)));
    let mut sheet = match bca2d {
        Some(c) => {
            let Meta::Bca2d(m) = &c.meta else { unreachable!() };
            Some(TimeSheet::flat(&m.spec.initial))
        }
        None => None,
    };
    let mut a = tr.initial.clone();
    let mut out = String::new();
    let mut frame = 0;
    let mut emit = |out: &mut String, n: u64, t: f64, a: &Assembly, sheet: &Option<TimeSheet>| -> Result<()> {
        let _ = writeln!(out, "frame {frame} event {n} time {}", crate::format::fmt_real(t));
        match (sheet, bca2d) {
            (Some(s), Some(c)) => out.push_str(&sheet_text(s, c)),
            _ => out.push_str(&ascii(c, sys, a)?),
        }
        frame += 1;
        Ok(())
    };
    emit(&mut out, 0, 0.0, &a, &sheet)?;
    for e in &tr.events {
        let r = validate_displacement(sys, &a, e.pos, e.invader)?
            .reaction()
            .ok_or_else(|| anyhow::anyhow!("event {} does not replay", e.index))?;
        apply_reaction_in_place(sys, &mut a, &r)?;
        if let (Some(s), Some(c)) = (sheet.as_mut(), bca2d) {
            track_time_sheet(c, s, e.pos, e.displaced, e.invader)?;
        }
        let n = e.index + 1;
        if n % every == 0 || n == tr.event_count {
            emit(&mut out, n, e.time, &a, &sheet)?;
        }
    }
    Ok(out)
}
