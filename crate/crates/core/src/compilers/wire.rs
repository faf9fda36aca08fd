use crate::model::{Dir, Warning};
use crate::Scalar;

use super::design::{Design, Layout, TileDef};
use super::{Bias, CellTag, CompileError, Construction, Meta, WireMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WireKind {
    /// Every step is bond-neutral: an unbiased random walk of the front.
    Reversible,
    /// Every step forms one extra bond.
    IrreversibleNaive,
    /// Binary signal with a reversible front and irreversible latches.
    Latching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Heading {
    #[default]
    East,
    North,
}

/// Wire of `length` cells (the input cell included) between a top and a
/// bottom row. `bit` selects the input of a latching wire and is ignored
/// otherwise.
pub fn compile_wire<S: Scalar>(
    length: usize,
    kind: WireKind,
    heading: Heading,
    bit: u8,
) -> Result<Construction<S>, CompileError> {
    if length < 2 {
        return Err(CompileError::BadSize(format!("wire length {length} < 2")));
    }
    if bit > 1 {
        return Err(CompileError::BadSize(format!("bit {bit}")));
    }
    let mut d = Design::new();
    d.add(TileDef::new("top", ["-", "-"], ["t", "-"], ["wn", "sn"], ["t", "-"]));
    d.add(TileDef::new("bottom", ["ws", "ss"], ["u", "-"], ["-", "-"], ["u", "-"]));
    d.add(TileDef::new("top.end", ["-", "-"], ["t", "-"], ["i", "i"], ["-", "-"]));
    d.add(TileDef::new("bottom.end", ["i", "i"], ["u", "-"], ["-", "-"], ["-", "-"]));
    d.add(TileDef::new("wire", ["wn", "-"], ["-", "w"], ["ws", "-"], ["a", "w"]));
    // A latching wire ends in a cap so that the last cell has an east neighbour.
    let width = if kind == WireKind::Latching { length + 1 } else { length };
    let mut layout = Layout::new(width, 3, "wire");
    let (signal_names, locked): (Vec<String>, bool) = match kind {
        WireKind::Reversible | WireKind::IrreversibleNaive => {
            let west = if kind == WireKind::Reversible { ["-", "b"] } else { ["a", "b"] };
            d.add(TileDef::new("signal", ["-", "sn"], ["a", "b"], ["-", "ss"], west));
            d.add(TileDef::new("input", ["i", "i"], ["a", "b"], ["i", "i"], ["-", "-"]));
            layout.set(0, 1, "input");
            (vec!["signal".into()], false)
        }
        WireKind::Latching => {
            for b in 0..2 {
                let (l, r) = (format!("l{b}"), format!("r{b}"));
                d.add(TileDef::new(format!("sig{b}"), ["-", "sn"], ["a", &r], ["-", "ss"], [&l, &r]));
                d.add(TileDef::new(format!("latch{b}"), ["wn", "-"], [&l, &r], ["ws", "-"], ["a", "-"]));
                // Double bond to the first signal tile, which can then never leave.
                d.add(TileDef::new(format!("input{b}"), ["i", "i"], [&l, &r], ["i", "i"], ["-", "-"]));
            }
            layout.set(0, 1, format!("input{bit}"));
            layout.set(1, 1, format!("sig{bit}"));
            d.add(TileDef::new("cap", ["wn", "sn"], ["-", "-"], ["ws", "ss"], ["a", "w"]));
            layout.set(length, 1, "cap");
            (vec!["sig0".into(), "sig1".into(), "latch0".into(), "latch1".into()], true)
        }
    };
    let mut tags = vec![CellTag::Filler; width * 3];
    for col in 0..width {
        layout.set(col, 0, "bottom");
        layout.set(col, 2, "top");
        tags[col] = CellTag::Bottom;
        tags[2 * width + col] = CellTag::Top;
        tags[width + col] = CellTag::Wire { line: 0, index: col };
    }
    layout.set(0, 0, "bottom.end");
    layout.set(0, 2, "top.end");
    tags[width] = CellTag::Input { line: 0, bit: locked.then_some(bit) };
    if locked {
        tags[width + length] = CellTag::Cap { line: 0 };
    }
    if locked {
        // As in circuits, pattern tiles of a latching wire stay out of
        // solution; the cap would otherwise out-bond any wire tile.
        for name in ["top", "bottom", "top.end", "bottom.end", "input0", "input1", "cap"] {
            d.concentration(name, 0.0);
        }
    }
    if locked && length < 3 {
        return Err(CompileError::BadSize(format!("latching wire length {length} < 3")));
    }

    let (d, layout, tags) = match heading {
        Heading::East => (d, layout, tags),
        Heading::North => transpose_all(&d, &layout, &tags, width, 3),
    };
    let system = d.build::<S>()?;
    let initial = layout.assemble(&system)?;
    let signal_tiles = signal_names.iter().map(|n| system.require_tile(n)).collect::<Result<_, _>>()?;
    Ok(Construction {
        system,
        initial,
        tags,
        bias: Bias::neutral(),
        meta: Meta::Wire(WireMeta { kind, heading, length, bit, signal_tiles }),
    })
}

fn transpose_all(d: &Design, layout: &Layout, tags: &[CellTag], w: usize, h: usize) -> (Design, Layout, Vec<CellTag>) {
    let t = d.transposed(|l| l.to_string());
    let lt = layout.transposed(|n| n.to_string());
    let mut tt = vec![CellTag::Filler; w * h];
    for row in 0..h {
        for col in 0..w {
            // (col, row) moves to (row, col) in a grid of width h.
            tt[col * h + row] = tags[row * w + col].clone();
        }
    }
    (t, lt, tt)
}

/// Role of a warning raised by the naive wire cross.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CrossWarning {
    /// The gate tile inserted while one input is still missing.
    IgnoredInput,
    /// A wire front extended with a signal whose content differs from the
    /// upstream signal.
    SignalFlip,
    Other,
}

/// Irreversible horizontal wire (signals `x` or `z`) and vertical wire
/// (`w` or `y`) meeting at a cross tile; the gate tile performs
/// `w + x -> y + z`. Each input arm holds `arm` cells, the input included.
pub fn compile_naive_wire_cross<S: Scalar>(arm: usize) -> Result<Construction<S>, CompileError> {
    if arm < 2 {
        return Err(CompileError::BadSize(format!("arm length {arm} < 2")));
    }
    let h = super::design::suffixed(".h");
    let v = super::design::suffixed(".v");
    let mut d = Design::new();
    // Horizontal pieces in their own frame, vertical ones transposed.
    let both = |d: &mut Design, t: TileDef| {
        d.add(TileDef { name: format!("{}.h", t.name), sides: t.sides.clone().map(|s| s.map(|l| h(&l))) });
        d.add(t.transposed(format!("{}.v", t.name), &v));
    };
    both(&mut d, TileDef::new("wire", ["w", "-"], ["-", "w"], ["w", "-"], ["a", "w"]));
    // Signal contents carry a `c` prefix to keep them apart from wire labels.
    for c in ["x", "z"] {
        let l = format!("c{c}");
        d.add(TileDef::new(format!("sig.{c}"), ["-", "s"], ["a", &l], ["-", "s"], ["a", &l]).map_labels(&h));
    }
    for c in ["w", "y"] {
        let l = format!("c{c}");
        d.add(
            TileDef::new("", ["-", "s"], ["a", &l], ["-", "s"], ["a", &l]).transposed(format!("sig.{c}"), &v),
        );
    }
    d.add(TileDef::new("input.x", ["w", "s"], ["a", "cx"], ["w", "s"], ["-", "-"]).map_labels(&h));
    d.add(TileDef::new("", ["w", "s"], ["a", "cw"], ["w", "s"], ["-", "-"]).transposed("input.w", &v));
    let hw = TileDef::new("", ["w", "-"], ["-", "w"], ["w", "-"], ["a", "w"]).map_labels(&h);
    let vw = TileDef::new("", ["w", "-"], ["-", "w"], ["w", "-"], ["a", "w"]).transposed("", &v);
    let mut cross = hw.clone();
    cross.name = "cross".into();
    cross.set_side(Dir::N, vw.side(Dir::N).clone());
    cross.set_side(Dir::S, vw.side(Dir::S).clone());
    d.add(cross);
    let hg = TileDef::new("", ["-", "-"], ["a", "cz"], ["-", "-"], ["a", "cx"]).map_labels(&h);
    let vg = TileDef::new("", ["-", "-"], ["a", "cy"], ["-", "-"], ["a", "cw"]).transposed("", &v);
    let mut gate = hg;
    gate.name = "gate".into();
    gate.set_side(Dir::N, vg.side(Dir::N).clone());
    gate.set_side(Dir::S, vg.side(Dir::S).clone());
    d.add(gate);
    let filler_h = TileDef::new("", ["w", "s"], ["-", "-"], ["w", "s"], ["-", "-"]).map_labels(&h);
    let filler_v = TileDef::new("", ["w", "s"], ["-", "-"], ["w", "s"], ["-", "-"]).transposed("", &v);
    let mut filler = filler_h;
    filler.name = "filler".into();
    filler.set_side(Dir::E, filler_v.side(Dir::E).clone());
    filler.set_side(Dir::W, filler_v.side(Dir::W).clone());
    d.add(filler);

    let n = 2 * arm + 1;
    let mut layout = Layout::new(n, n, "filler");
    let mut tags = vec![CellTag::Filler; n * n];
    for i in 0..n {
        layout.set(i, arm, "wire.h");
        tags[arm * n + i] = CellTag::Wire { line: 0, index: i };
        layout.set(arm, i, "wire.v");
        tags[i * n + arm] = CellTag::Wire { line: 1, index: i };
    }
    layout.set(0, arm, "input.x");
    tags[arm * n] = CellTag::Input { line: 0, bit: None };
    layout.set(arm, 0, "input.w");
    tags[arm] = CellTag::Input { line: 1, bit: None };
    layout.set(arm, arm, "cross");
    tags[arm * n + arm] = CellTag::Gate { row: 0, col: 0 };

    for name in ["input.x", "input.w", "cross", "filler"] {
        d.concentration(name, 0.0);
    }
    let system = d.build::<S>()?;
    let initial = layout.assemble(&system)?;
    Ok(Construction { system, initial, tags, bias: Bias::neutral(), meta: Meta::WireCross { arm } })
}

impl<S: Scalar> Construction<S> {
    /// Classifies a warning of a naive wire cross.
    pub fn classify_cross_warning(&self, w: &Warning) -> CrossWarning {
        let at = self.initial.index_of(w.pos);
        let invader = self.system.name(w.invader);
        match &self.tags[at] {
            CellTag::Gate { .. } if invader == "gate" => CrossWarning::IgnoredInput,
            CellTag::Wire { .. } if invader.starts_with("sig.") => CrossWarning::SignalFlip,
            _ => CrossWarning::Other,
        }
    }
}

impl TileDef {
    pub(crate) fn map_labels(mut self, f: &impl Fn(&str) -> String) -> Self {
        self.sides = self.sides.map(|s| s.map(|l| f(&l)));
        self
    }
}
