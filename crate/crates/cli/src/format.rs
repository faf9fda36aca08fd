//! Line-oriented text formats for tile systems, assemblies and
//! trajectories.
//!
//! Every file starts with `satidi-<kind> <version>`. Blank lines and text
//! after `#` are ignored on input. Real numbers are written with 17
//! significant digits, so writing what was parsed gives the same bytes.

use std::fmt::Write as _;

use satidi::compilers::CellTag;
use satidi::engine::{Event, Record, SimConfig, Status, Trajectory};
use satidi::model::{Assembly, Dir, ModelError, Pos, TileSystem, Warning, INERT};
use satidi::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot write {0}")]
    Unwritable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn perr(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip an f64.
pub fn fmt_real<S: Scalar>(v: S) -> String {
    format!("{:.16e}", v.to_f64().unwrap_or(f64::NAN))
}

pub fn parse_real<S: Scalar>(line: usize, s: &str) -> Result<S, FormatError> {
    let v: f64 = s.parse().map_err(|_| perr(line, format!("bad number '{s}'")))?;
    S::from(v).ok_or_else(|| perr(line, format!("number '{s}' out of range")))
}

/// Concentration in molar. Accepts `1e-9`, `1e-9 M`, `1 nM`, `1nM`, with
/// prefixes m, u, µ, n, p, f.
pub fn parse_molar<S: Scalar>(line: usize, s: &str) -> Result<S, FormatError> {
    let s = s.trim();
    let body = s.strip_suffix('M').unwrap_or(s).trim_end();
    let (num, scale) = match body.chars().last() {
        Some('m') => (&body[..body.len() - 1], 1e-3),
        Some('u') => (&body[..body.len() - 1], 1e-6),
        Some('µ') => (&body[..body.len() - 'µ'.len_utf8()], 1e-6),
        Some('n') => (&body[..body.len() - 1], 1e-9),
        Some('p') => (&body[..body.len() - 1], 1e-12),
        Some('f') => (&body[..body.len() - 1], 1e-15),
        _ => (body, 1.0),
    };
    if scale != 1.0 && !s.ends_with('M') {
        return Err(perr(line, format!("concentration '{s}' has a prefix but no unit")));
    }
    let v: f64 = num.trim().parse().map_err(|_| perr(line, format!("bad concentration '{s}'")))?;
    S::from(v * scale).ok_or_else(|| perr(line, format!("concentration '{s}' out of range")))
}

/// Non-empty, non-comment lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn expect_header<'a>(
    it: &mut impl Iterator<Item = (usize, &'a str)>,
    kind: &str,
) -> Result<(), FormatError> {
    let (n, l) = it.next().ok_or_else(|| perr(0, "empty file"))?;
    let mut w = l.split_whitespace();
    let magic = format!("satidi-{kind}");
    if w.next() != Some(magic.as_str()) {
        return Err(perr(n, format!("expected '{magic} <version>'")));
    }
    match w.next().map(str::parse::<u32>) {
        Some(Ok(FORMAT_VERSION)) if w.next().is_none() => Ok(()),
        Some(Ok(v)) => Err(perr(n, format!("unsupported format version {v}"))),
        _ => Err(perr(n, "missing format version")),
    }
}

fn keyed<'a>(n: usize, l: &'a str, key: &str) -> Result<&'a str, FormatError> {
    match l.split_once(char::is_whitespace) {
        Some((k, rest)) if k == key => Ok(rest.trim()),
        _ => Err(perr(n, format!("expected '{key} ...'"))),
    }
}

fn word_ok(w: &str) -> bool {
    !w.is_empty() && !w.contains(char::is_whitespace) && !w.contains('#') && !w.starts_with('[')
}

// ---------------------------------------------------------------- systems

/// Canonical text of a tile system: strengths sorted by label, tiles and
/// concentrations sorted by tile name.
pub fn write_system<S: Scalar>(sys: &TileSystem<S>) -> Result<String, FormatError> {
    let mut out = format!("satidi-system {FORMAT_VERSION}\n");
    let _ = writeln!(out, "k {}", fmt_real(sys.k()));
    let _ = writeln!(out, "c0 {} M", fmt_real(sys.c0()));
    let mut strengths: Vec<(&str, S)> = sys.strengths().collect();
    strengths.sort_by(|a, b| a.0.cmp(b.0));
    out.push_str("[strengths]\n");
    for (l, e) in strengths {
        if !word_ok(l) {
            return Err(FormatError::Unwritable(format!("label '{l}'")));
        }
        let _ = writeln!(out, "{l} {}", fmt_real(e));
    }
    out.push_str("[tiles]  # name  N a b  E a b  S a b  W a b\n");
    for &id in sys.ids_by_name() {
        let t = sys.tile(id);
        if !word_ok(&t.name) {
            return Err(FormatError::Unwritable(format!("tile name '{}'", t.name)));
        }
        out.push_str(&t.name);
        for d in Dir::ALL {
            let [a, b] = t.side(d);
            let _ = write!(out, "  {} {}", sys.label_name(a), sys.label_name(b));
        }
        out.push('\n');
    }
    out.push_str("[concentrations]\n");
    for &id in sys.ids_by_name() {
        let _ = writeln!(out, "{} {} M", sys.name(id), fmt_real(sys.concentration(id)));
    }
    Ok(out)
}

pub fn parse_system<S: Scalar>(text: &str) -> Result<TileSystem<S>, FormatError> {
    let mut it = lines(text);
    expect_header(&mut it, "system")?;
    let (n, l) = it.next().ok_or_else(|| perr(0, "missing k"))?;
    let k = parse_real::<S>(n, keyed(n, l, "k")?)?;
    let (n, l) = it.next().ok_or_else(|| perr(0, "missing c0"))?;
    let c0 = parse_molar::<S>(n, keyed(n, l, "c0")?)?;
    let mut b = TileSystem::<S>::builder().k(k).c0(c0);
    let mut section = "";
    let mut seen_labels = std::collections::HashSet::new();
    let mut seen_tiles = std::collections::HashSet::new();
    let mut seen_conc = std::collections::HashSet::new();
    for (n, l) in it {
        if l.starts_with('[') {
            let next = match l {
                "[strengths]" if section.is_empty() => "strengths",
                "[tiles]" if section == "strengths" => "tiles",
                "[concentrations]" if section == "tiles" => "concentrations",
                _ => return Err(perr(n, format!("unexpected section {l}"))),
            };
            section = next;
            continue;
        }
        let w: Vec<&str> = l.split_whitespace().collect();
        match section {
            "strengths" => {
                if w.len() != 2 {
                    return Err(perr(n, "expected 'label strength'"));
                }
                if w[0] == INERT {
                    return Err(perr(n, "the inert label has no strength"));
                }
                if !seen_labels.insert(w[0]) {
                    return Err(perr(n, format!("duplicate label '{}'", w[0])));
                }
                b = b.strength(w[0], parse_real(n, w[1])?);
            }
            "tiles" => {
                if w.len() != 9 {
                    return Err(perr(n, "expected a name and 8 labels"));
                }
                if !seen_tiles.insert(w[0]) {
                    return Err(perr(n, format!("duplicate tile '{}'", w[0])));
                }
                b = b.tile(w[0], [w[1], w[2]], [w[3], w[4]], [w[5], w[6]], [w[7], w[8]]);
            }
            "concentrations" => {
                if w.len() < 2 {
                    return Err(perr(n, "expected 'name concentration'"));
                }
                if !b.has_tile(w[0]) {
                    return Err(perr(n, format!("concentration for unknown tile '{}'", w[0])));
                }
                if !seen_conc.insert(w[0]) {
                    return Err(perr(n, format!("duplicate concentration for '{}'", w[0])));
                }
                b = b.concentration(w[0], parse_molar(n, &w[1..].join(" "))?);
            }
            _ => return Err(perr(n, "entry outside any section")),
        }
    }
    Ok(b.build()?)
}

// ------------------------------------------------------------- assemblies

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyFile {
    pub assembly: Assembly,
    /// `compile` arguments that rebuild the construction, if known.
    pub construction: Option<Vec<String>>,
    /// Role of each cell, row-major from the south row.
    pub readout_map: Option<Vec<CellTag>>,
}

pub fn tag_text(t: &CellTag) -> String {
    match t {
        CellTag::Filler => "filler".into(),
        CellTag::Border => "border".into(),
        CellTag::Top => "top".into(),
        CellTag::Bottom => "bottom".into(),
        CellTag::Input { line, bit: Some(b) } => format!("in:{line}:{b}"),
        CellTag::Input { line, bit: None } => format!("in:{line}:-"),
        CellTag::Wire { line, index } => format!("wire:{line}:{index}"),
        CellTag::Gate { row, col } => format!("gate:{row}:{col}"),
        CellTag::Cap { line } => format!("cap:{line}"),
        CellTag::Cell { x, y } => format!("cell:{x}:{y}"),
        CellTag::Block { parity, x, y } => format!("block:{parity}:{x}:{y}"),
    }
}

pub fn parse_tag(s: &str) -> Option<CellTag> {
    let f: Vec<&str> = s.split(':').collect();
    let u = |i: usize| f.get(i)?.parse::<usize>().ok();
    let i = |k: usize| f.get(k)?.parse::<i64>().ok();
    Some(match (f[0], f.len()) {
        ("filler", 1) => CellTag::Filler,
        ("border", 1) => CellTag::Border,
        ("top", 1) => CellTag::Top,
        ("bottom", 1) => CellTag::Bottom,
        ("in", 3) => CellTag::Input { line: u(1)?, bit: if f[2] == "-" { None } else { Some(f[2].parse().ok()?) } },
        ("wire", 3) => CellTag::Wire { line: u(1)?, index: u(2)? },
        ("gate", 3) => CellTag::Gate { row: u(1)?, col: u(2)? },
        ("cap", 2) => CellTag::Cap { line: u(1)? },
        ("cell", 3) => CellTag::Cell { x: u(1)?, y: u(2)? },
        ("block", 4) => CellTag::Block { parity: f[1].parse().ok()?, x: i(2)?, y: i(3)? },
        _ => return None,
    })
}

fn write_grid<S: Scalar>(out: &mut String, sys: &TileSystem<S>, a: &Assembly) {
    for row in 0..a.height() {
        let names: Vec<&str> = (0..a.width()).map(|c| sys.name(a.get(Pos::new(c, row)))).collect();
        out.push_str(&names.join(" "));
        out.push('\n');
    }
}

fn read_grid<'a, S: Scalar>(
    it: &mut impl Iterator<Item = (usize, &'a str)>,
    sys: &TileSystem<S>,
    width: usize,
    height: usize,
) -> Result<Assembly, FormatError> {
    let mut cells = Vec::with_capacity(width * height);
    for row in 0..height {
        let (n, l) = it.next().ok_or_else(|| perr(0, format!("missing row {row}")))?;
        let names: Vec<&str> = l.split_whitespace().collect();
        if names.len() != width {
            return Err(perr(n, format!("row {row} has {} cells, expected {width}", names.len())));
        }
        for name in names {
            cells.push(sys.tile_id(name).ok_or_else(|| perr(n, format!("unknown tile '{name}'")))?);
        }
    }
    Ok(Assembly::from_cells(width, height, cells)?)
}

/// Rows go from row 0 (south) up, one line per row.
pub fn write_assembly<S: Scalar>(sys: &TileSystem<S>, f: &AssemblyFile) -> Result<String, FormatError> {
    let a = &f.assembly;
    a.check_against(sys)?;
    let mut out = format!("satidi-assembly {FORMAT_VERSION}\n");
    let _ = writeln!(out, "size {} {}", a.width(), a.height());
    if let Some(args) = &f.construction {
        if let Some(bad) = args.iter().find(|w| !word_ok(w)) {
            return Err(FormatError::Unwritable(format!("construction argument '{bad}'")));
        }
        let _ = writeln!(out, "construction {}", args.join(" "));
    }
    out.push_str("[cells]\n");
    write_grid(&mut out, sys, a);
    if let Some(tags) = &f.readout_map {
        if tags.len() != a.len() {
            return Err(FormatError::Unwritable(format!("readout map of {} cells", tags.len())));
        }
        out.push_str("[readout_map]\n");
        for row in tags.chunks(a.width()) {
            out.push_str(&row.iter().map(tag_text).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn parse_assembly<S: Scalar>(sys: &TileSystem<S>, text: &str) -> Result<AssemblyFile, FormatError> {
    let mut it = lines(text).peekable();
    expect_header(&mut it, "assembly")?;
    let (n, l) = it.next().ok_or_else(|| perr(0, "missing size"))?;
    let size: Vec<usize> = keyed(n, l, "size")?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| perr(n, "bad size")))
        .collect::<Result<_, _>>()?;
    let [width, height] = size[..] else { return Err(perr(n, "expected 'size W H'")) };
    let mut construction = None;
    if let Some(&(n, l)) = it.peek() {
        if l.starts_with("construction") {
            construction = Some(keyed(n, l, "construction")?.split_whitespace().map(String::from).collect());
            it.next();
        }
    }
    match it.next() {
        Some((_, "[cells]")) => {}
        Some((n, _)) => return Err(perr(n, "expected [cells]")),
        None => return Err(perr(0, "missing [cells]")),
    }
    let assembly = read_grid(&mut it, sys, width, height)?;
    let mut readout_map = None;
    match it.next() {
        None => {}
        Some((_, "[readout_map]")) => {
            let mut tags = Vec::with_capacity(width * height);
            for _ in 0..height {
                let (n, l) = it.next().ok_or_else(|| perr(0, "short readout map"))?;
                let row: Vec<CellTag> = l
                    .split_whitespace()
                    .map(|w| parse_tag(w).ok_or_else(|| perr(n, format!("bad cell tag '{w}'"))))
                    .collect::<Result<_, _>>()?;
                if row.len() != width {
                    return Err(perr(n, "readout map row has the wrong width"));
                }
                tags.extend(row);
            }
            readout_map = Some(tags);
        }
        Some((n, _)) => return Err(perr(n, "unexpected content after the cells")),
    }
    if let Some((n, _)) = it.next() {
        return Err(perr(n, "trailing content"));
    }
    Ok(AssemblyFile { assembly, construction, readout_map })
}

// ----------------------------------------------------------- trajectories

pub fn record_text(r: Record) -> String {
    match r {
        Record::Events => "events".into(),
        Record::FinalOnly => "final".into(),
        Record::SnapshotsEvery(k) => format!("snapshots:{k}"),
    }
}

pub fn parse_record(s: &str) -> Option<Record> {
    match s {
        "events" => Some(Record::Events),
        "final" => Some(Record::FinalOnly),
        _ => s.strip_prefix("snapshots:")?.parse().ok().filter(|&k| k > 0).map(Record::SnapshotsEvery),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

fn status_text(s: Status) -> &'static str {
    match s {
        Status::Stalled => "stalled",
        Status::EventLimit => "event-limit",
        Status::TimeLimit => "time-limit",
        Status::Target => "target",
    }
}

fn dirs_text(ds: &[Dir]) -> String {
    ds.iter().map(|d| d.letter()).collect()
}

/// Event lines are `e index time col row invader displaced dE`; warning
/// lines `w event col row displaced invader sides` sit just before the
/// first event executed after the audit that found them. Snapshots are not
/// stored; the final assembly is.
pub fn write_trajectory<S: Scalar>(
    sys: &TileSystem<S>,
    cfg: &SimConfig<S>,
    tr: &Trajectory<S>,
) -> Result<String, FormatError> {
    let mut out = format!("satidi-trajectory {FORMAT_VERSION}\n");
    let _ = writeln!(out, "seed {}", tr.seed);
    let _ = writeln!(out, "rng {}", tr.rng);
    let _ = writeln!(out, "k {}", fmt_real(sys.k()));
    let _ = writeln!(
        out,
        "config max_events={} max_time={} audit_every={} record={}",
        opt(cfg.max_events),
        opt(cfg.max_time.map(fmt_real)),
        cfg.audit_every,
        record_text(cfg.record)
    );
    let _ = writeln!(out, "size {} {}", tr.initial.width(), tr.initial.height());
    out.push_str("[events]\n");
    let warn = |out: &mut String, w: &Warning| {
        let _ = writeln!(
            out,
            "w {} {} {} {} {} {}",
            opt(w.event),
            w.pos.col,
            w.pos.row,
            sys.name(w.displaced),
            sys.name(w.invader),
            dirs_text(&w.unmediated)
        );
    };
    let mut ws = tr.warnings.iter().peekable();
    for e in &tr.events {
        while let Some(w) = ws.next_if(|w| w.event.is_none_or(|k| k <= e.index)) {
            warn(&mut out, w);
        }
        let _ = writeln!(
            out,
            "e {} {} {} {} {} {} {}",
            e.index,
            fmt_real(e.time),
            e.pos.col,
            e.pos.row,
            sys.name(e.invader),
            sys.name(e.displaced),
            fmt_real(e.delta_e)
        );
    }
    for w in ws {
        warn(&mut out, w);
    }
    out.push_str("[summary]\n");
    let _ = writeln!(out, "status {}", status_text(tr.status));
    let _ = writeln!(out, "events {}", tr.event_count);
    let _ = writeln!(out, "time {}", fmt_real(tr.time));
    let _ = writeln!(out, "energy_initial {}", fmt_real(tr.energy[0]));
    let _ = writeln!(out, "energy_final {}", fmt_real(*tr.energy.last().expect("initial energy")));
    out.push_str("[final]\n");
    write_grid(&mut out, sys, &tr.final_assembly);
    Ok(out)
}

/// Reads a trajectory recorded from `initial`. The energy trace is rebuilt
/// from the event energies.
pub fn parse_trajectory<S: Scalar>(
    sys: &TileSystem<S>,
    initial: &Assembly,
    text: &str,
) -> Result<(SimConfig<S>, Trajectory<S>), FormatError> {
    let mut it = lines(text).peekable();
    expect_header(&mut it, "trajectory")?;
    let mut next = |key: &str| -> Result<(usize, String), FormatError> {
        let (n, l) = it.next().ok_or_else(|| perr(0, format!("missing {key}")))?;
        Ok((n, keyed(n, l, key)?.to_string()))
    };
    let (n, seed) = next("seed")?;
    let seed: u64 = seed.parse().map_err(|_| perr(n, "bad seed"))?;
    let (n, rng) = next("rng")?;
    if rng != satidi::engine::RNG_ALGORITHM {
        return Err(perr(n, format!("unsupported generator '{rng}'")));
    }
    let (n, k) = next("k")?;
    if parse_real::<S>(n, &k)? != sys.k() {
        return Err(perr(n, "rate constant differs from the tile system"));
    }
    let (n, c) = next("config")?;
    let mut cfg = SimConfig::<S>::events(seed, 0);
    for kv in c.split_whitespace() {
        let (key, v) = kv.split_once('=').ok_or_else(|| perr(n, format!("bad config entry '{kv}'")))?;
        let bad = || perr(n, format!("bad value in '{kv}'"));
        match key {
            "max_events" => cfg.max_events = if v == "none" { None } else { Some(v.parse().map_err(|_| bad())?) },
            "max_time" => cfg.max_time = if v == "none" { None } else { Some(parse_real(n, v)?) },
            "audit_every" => cfg.audit_every = v.parse().map_err(|_| bad())?,
            "record" => cfg.record = parse_record(v).ok_or_else(bad)?,
            _ => return Err(perr(n, format!("unknown config key '{key}'"))),
        }
    }
    let (n, size) = next("size")?;
    if size != format!("{} {}", initial.width(), initial.height()) {
        return Err(perr(n, "trajectory size differs from the assembly"));
    }
    match it.next() {
        Some((_, "[events]")) => {}
        other => return Err(perr(other.map_or(0, |x| x.0), "expected [events]")),
    }
    let tile = |n: usize, s: &str| sys.tile_id(s).ok_or_else(|| perr(n, format!("unknown tile '{s}'")));
    let num = |n: usize, s: &str| s.parse::<usize>().map_err(|_| perr(n, format!("bad integer '{s}'")));
    let mut events = Vec::new();
    let mut warnings = Vec::new();
    let mut energy = Vec::new();
    loop {
        let (n, l) = it.next().ok_or_else(|| perr(0, "missing [summary]"))?;
        if l == "[summary]" {
            break;
        }
        let w: Vec<&str> = l.split_whitespace().collect();
        match (w[0], w.len()) {
            ("e", 8) => {
                let index = num(n, w[1])? as u64;
                if index != events.len() as u64 {
                    return Err(perr(n, format!("event {index} out of sequence")));
                }
                events.push(Event {
                    index,
                    time: parse_real(n, w[2])?,
                    pos: Pos::new(num(n, w[3])?, num(n, w[4])?),
                    invader: tile(n, w[5])?,
                    displaced: tile(n, w[6])?,
                    delta_e: parse_real(n, w[7])?,
                });
            }
            ("w", 6 | 7) => {
                let unmediated = w
                    .get(6)
                    .map_or("", |s| *s)
                    .chars()
                    .map(|c| Dir::from_letter(c).ok_or_else(|| perr(n, format!("bad side '{c}'"))))
                    .collect::<Result<_, _>>()?;
                warnings.push(Warning {
                    event: if w[1] == "none" { None } else { Some(num(n, w[1])? as u64) },
                    pos: Pos::new(num(n, w[2])?, num(n, w[3])?),
                    displaced: tile(n, w[4])?,
                    invader: tile(n, w[5])?,
                    unmediated,
                });
            }
            _ => return Err(perr(n, "expected an event or warning line")),
        }
    }
    let mut summary = |key: &str| -> Result<(usize, String), FormatError> {
        let (n, l) = it.next().ok_or_else(|| perr(0, format!("missing {key}")))?;
        Ok((n, keyed(n, l, key)?.to_string()))
    };
    let (n, s) = summary("status")?;
    let status = match s.as_str() {
        "stalled" => Status::Stalled,
        "event-limit" => Status::EventLimit,
        "time-limit" => Status::TimeLimit,
        "target" => Status::Target,
        _ => return Err(perr(n, format!("bad status '{s}'"))),
    };
    let (n, s) = summary("events")?;
    let event_count: u64 = s.parse().map_err(|_| perr(n, "bad event count"))?;
    let (n, s) = summary("time")?;
    let time = parse_real(n, &s)?;
    let (n, s) = summary("energy_initial")?;
    let e0: S = parse_real(n, &s)?;
    let (n, s) = summary("energy_final")?;
    let e1: S = parse_real(n, &s)?;
    energy.push(e0);
    for e in &events {
        let last = *energy.last().expect("nonempty");
        energy.push(last + e.delta_e);
    }
    if events.is_empty() {
        if e1 != e0 {
            energy.push(e1);
        }
    } else if *energy.last().expect("nonempty") != e1 {
        return Err(perr(n, "final energy disagrees with the event energies"));
    }
    match it.next() {
        Some((_, "[final]")) => {}
        other => return Err(perr(other.map_or(0, |x| x.0), "expected [final]")),
    }
    let final_assembly = read_grid(&mut it, sys, initial.width(), initial.height())?;
    if let Some((n, _)) = it.next() {
        return Err(perr(n, "trailing content"));
    }
    if !events.is_empty() && events.len() as u64 != event_count {
        return Err(perr(0, "event count disagrees with the event lines"));
    }
    let tr = Trajectory {
        seed,
        rng: satidi::engine::RNG_ALGORITHM,
        initial: initial.clone(),
        events,
        snapshots: Vec::new(),
        final_assembly,
        warnings,
        energy,
        status,
        event_count,
        time,
    };
    Ok((cfg, tr))
}
