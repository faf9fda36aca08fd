//! Command-line front end: compile constructions to files, simulate, audit,
//! analyze and render them.

pub mod format;
pub mod recipe;
pub mod render;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use satidi::compilers::{readout, Construction, Meta, Readout};
use satidi::engine::*;
use satidi::model::{bond_energy, Assembly, Pos, TileSystem};

use format::AssemblyFile;
use recipe::{parse_recipe, Recipe};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_STALLED: i32 = 3;
pub const EXIT_WARNINGS: i32 = 4;

/// Default output directory when `--out-dir` is not given.
pub const OUT_DIR_ENV: &str = "SATIDI_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "satidi", version, about = "Tile displacement systems: compile, simulate, audit, analyze, render")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Inputs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub assembly: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Style {
    Ascii,
    GridImage,
    HistoryStrip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Statespace,
    Balance,
    Hitting,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the tile system and initial assembly of a construction.
    Compile {
        /// Output directory (default: $SATIDI_OUT_DIR or the current one).
        #[arg(long, global = true)]
        out_dir: Option<PathBuf>,
        /// Base name of the output files (default: the construction kind).
        #[arg(long, global = true)]
        name: Option<String>,
        #[command(subcommand)]
        recipe: Recipe,
    },
    /// Run the stochastic simulation and write trajectory files.
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Event limit; 10000 when neither limit is given.
        #[arg(long)]
        max_events: Option<u64>,
        #[arg(long)]
        max_time: Option<f64>,
        /// Audit for unmediated replacements every this many events; 0 is off.
        #[arg(long, default_value_t = 0)]
        audit_every: u64,
        /// `events`, `final` or `snapshots:K`.
        #[arg(long, default_value = "events")]
        record: String,
        /// Independent replicas, seeds `seed + i`, run in parallel.
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// Stop once the construction's readout is complete.
        #[arg(long)]
        until_complete: bool,
        /// Exit with status 4 if any warning was seen.
        #[arg(long)]
        strict: bool,
        /// Trajectory file (default: <out-dir>/<assembly stem>.trajectory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Report every unmediated replacement available in the assembly.
    Audit {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        strict: bool,
    },
    /// Exact state-space analysis or first-passage statistics.
    Analyze {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum)]
        mode: Mode,
        /// State cap for enumeration.
        #[arg(long, default_value_t = 100_000)]
        cap: usize,
        /// Hitting target: `complete` or `cell:COL:ROW=TILE`.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 100)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_events: u64,
        /// Report file (default: <out-dir>/<assembly stem>.<mode>.report).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Render an assembly, or the final state or history of a trajectory.
    Render {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ascii")]
        style: Style,
        /// Events between history-strip frames.
        #[arg(long, default_value_t = 1000)]
        every: u64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses arguments, runs the command and returns the exit code. Errors
/// go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned())
}

/// A system and assembly read from files, with the construction rebuilt
/// when the assembly names one.
pub struct Loaded {
    pub system: TileSystem,
    pub file: AssemblyFile,
    pub construction: Option<Construction>,
}

pub fn load(inputs: &Inputs) -> Result<Loaded> {
    let sys_text = read(&inputs.system)?;
    let asm_text = read(&inputs.assembly)?;
    let system: TileSystem =
        format::parse_system(&sys_text).with_context(|| format!("in {}", inputs.system.display()))?;
    let file =
        format::parse_assembly(&system, &asm_text).with_context(|| format!("in {}", inputs.assembly.display()))?;
    let Some(args) = &file.construction else {
        return Ok(Loaded { system, file, construction: None });
    };
    let (c, _) = parse_recipe(args)?.build()?;
    if format::write_system(&c.system)? != format::write_system(&system)? {
        bail!("{} does not match the construction named in {}", inputs.system.display(), inputs.assembly.display());
    }
    // Re-read against the construction's own tile numbering.
    let file = format::parse_assembly(&c.system, &asm_text)?;
    if file.readout_map.as_ref().is_some_and(|m| *m != c.tags) {
        bail!("readout map of {} does not match its construction", inputs.assembly.display());
    }
    Ok(Loaded { system: c.system.clone(), file, construction: Some(c) })
}

/// Whether the construction's readout is complete.
pub fn is_complete(c: &Construction, a: &Assembly) -> Result<bool> {
    Ok(match readout(c, a)? {
        Readout::Wire { front, .. } => {
            let Meta::Wire(m) = &c.meta else { unreachable!("wire meta") };
            front + 1 == m.length
        }
        Readout::Cross { completed } => completed,
        Readout::Circuit(r) => r.completeness == 1.0,
        Readout::Bca1d(r) => r.completeness == 1.0,
        Readout::Bca2d(_) => bail!("2D automata have no completion"),
    })
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Compile { out_dir: dir, name, recipe } => {
            let (c, args) = recipe.build()?;
            let dir = out_dir(dir);
            let name = name.unwrap_or_else(|| recipe.kind().to_string());
            let sys_path = dir.join(format!("{name}.system"));
            let asm_path = dir.join(format!("{name}.assembly"));
            write_file(&sys_path, &format::write_system(&c.system)?)?;
            let file = AssemblyFile { assembly: c.initial.clone(), construction: Some(args), readout_map: Some(c.tags.clone()) };
            write_file(&asm_path, &format::write_assembly(&c.system, &file)?)?;
            println!(
                "wrote {} ({} tile types) and {} ({}x{})",
                sys_path.display(),
                c.system.tile_count(),
                asm_path.display(),
                c.initial.width(),
                c.initial.height()
            );
            Ok(EXIT_OK)
        }
        Command::Simulate {
            inputs,
            seed,
            max_events,
            max_time,
            audit_every,
            record,
            replicas,
            until_complete,
            strict,
            out,
            out_dir: dir,
        } => {
            let l = load(&inputs)?;
            let record = format::parse_record(&record).with_context(|| format!("bad --record '{record}'"))?;
            if replicas == 0 {
                bail!("--replicas must be positive");
            }
            if until_complete && l.construction.is_none() {
                bail!("--until-complete needs an assembly compiled by this tool");
            }
            let base = SimConfig {
                seed,
                max_events: max_events.or(if max_time.is_none() { Some(10_000) } else { None }),
                max_time,
                audit_every,
                record,
                verify_incremental: false,
            };
            base.validate()?;
            if let Some(c) = &l.construction {
                if until_complete {
                    is_complete(c, &l.file.assembly)?;
                }
            }
            let runs: Vec<Result<(SimConfig, Trajectory)>> = (0..replicas)
                .into_par_iter()
                .map(|i| {
                    let cfg = SimConfig { seed: seed.wrapping_add(i as u64), ..base.clone() };
                    let tr = match (&l.construction, until_complete) {
                        (Some(c), true) => {
                            simulate_until(&l.system, &l.file.assembly, &cfg, |a| is_complete(c, a).unwrap_or(false))?
                        }
                        _ => simulate(&l.system, &l.file.assembly, &cfg)?,
                    };
                    Ok((cfg, tr))
                })
                .collect();
            let dir = out_dir(dir);
            let s = stem(&inputs.assembly);
            let mut code = EXIT_OK;
            let mut any_warning = false;
            for (i, run) in runs.into_iter().enumerate() {
                let (cfg, tr) = run?;
                let path = match (&out, replicas) {
                    (Some(p), 1) => p.clone(),
                    (Some(p), _) => p.with_extension(format!("r{i}.trajectory")),
                    (None, 1) => dir.join(format!("{s}.trajectory")),
                    (None, _) => dir.join(format!("{s}.r{i}.trajectory")),
                };
                write_file(&path, &format::write_trajectory(&l.system, &cfg, &tr)?)?;
                let stderr = std::io::stderr();
                let mut err = stderr.lock();
                for w in &tr.warnings {
                    let at = w.event.map_or_else(String::new, |e| format!(" event {e}"));
                    let _ = writeln!(err, "replica {i}{at} {}", w.describe(&l.system));
                }
                any_warning |= !tr.warnings.is_empty();
                let constant = tr.energy.iter().all(|&e| e == tr.energy[0]);
                println!(
                    "replica {i} seed {} events {} time {} status {} energy {} warnings {} -> {}",
                    cfg.seed,
                    tr.event_count,
                    format::fmt_real(tr.time),
                    tr.status.as_str(),
                    if constant { "constant" } else { "varies" },
                    tr.warnings.len(),
                    path.display()
                );
                if tr.status == Status::Stalled {
                    code = EXIT_STALLED;
                }
            }
            Ok(if strict && any_warning { EXIT_WARNINGS } else { code })
        }
        Command::Audit { inputs, strict } => {
            let l = load(&inputs)?;
            let cfg = SimConfig::events(0, 0).with_audit(1);
            let tr = simulate(&l.system, &l.file.assembly, &cfg)?;
            for w in &tr.warnings {
                eprintln!("{}", w.describe(&l.system));
            }
            println!("warnings {}", tr.warnings.len());
            Ok(if strict && !tr.warnings.is_empty() { EXIT_WARNINGS } else { EXIT_OK })
        }
        Command::Analyze { inputs, mode, cap, target, replicas, seed, max_events, out, out_dir: dir } => {
            let l = load(&inputs)?;
            let (report, summary) = match mode {
                Mode::Statespace => statespace_report(&l, cap)?,
                Mode::Balance => balance_report(&l, cap)?,
                Mode::Hitting => {
                    let target = target.context("hitting mode needs --target")?;
                    hitting_report(&l, &target, replicas, &SimConfig::events(seed, max_events))?
                }
            };
            let name = match mode {
                Mode::Statespace => "statespace",
                Mode::Balance => "balance",
                Mode::Hitting => "hitting",
            };
            let path = out.unwrap_or_else(|| out_dir(dir).join(format!("{}.{name}.report", stem(&inputs.assembly))));
            write_file(&path, &report)?;
            println!("{summary} -> {}", path.display());
            Ok(EXIT_OK)
        }
        Command::Render { inputs, trajectory, style, every, out } => {
            let l = load(&inputs)?;
            let c = l.construction.as_ref();
            let tr = match &trajectory {
                Some(p) => {
                    let text = read(p)?;
                    Some(format::parse_trajectory(&l.system, &l.file.assembly, &text)?.1)
                }
                None => None,
            };
            let state = tr.as_ref().map_or(&l.file.assembly, |t| &t.final_assembly);
            let text = match style {
                Style::Ascii => render::ascii(c, &l.system, state)?,
                Style::GridImage => render::grid_image(c, state)?,
                Style::HistoryStrip => {
                    let tr = tr.context("history strips need --trajectory")?;
                    render::history_strip(c, &l.system, &tr, every)?
                }
            };
            match out {
                Some(p) => write_file(&p, &text)?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
    }
}

fn header(mode: &str) -> String {
    format!("satidi-report {}\nmode {mode}\n", format::FORMAT_VERSION)
}

fn statespace_report(l: &Loaded, cap: usize) -> Result<(String, String)> {
    let g = enumerate_state_space(&l.system, &l.file.assembly, cap);
    let mut out = header("statespace");
    let _ = writeln!(out, "states {}\nedges {}\ntruncated {}", g.len(), g.edges.len(), g.truncated);
    let _ = writeln!(out, "reversible {}", g.all_reversible());
    let mut summary = format!("{} states, {} edges", g.len(), g.edges.len());
    if g.truncated {
        summary.push_str(", truncated");
    }
    match stationary_distribution(&l.system, &g) {
        Ok(st) => {
            let _ = writeln!(out, "max_relative_gap {}", format::fmt_real(st.max_relative_gap()));
            out.push_str("[states]  # index bond_energy stationary boltzmann\n");
            for (i, a) in g.states.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{i} {} {} {}",
                    format::fmt_real(bond_energy(&l.system, a)),
                    format::fmt_real(st.probabilities[i]),
                    format::fmt_real(st.boltzmann[i])
                );
            }
            if let Some(c) = &l.construction {
                if let Some(table) = bias_table(c, &g, &st.probabilities)? {
                    out.push_str(&table);
                }
            }
        }
        Err(e) => {
            let _ = writeln!(out, "stationary none  # {e}");
        }
    }
    Ok((out, summary))
}

/// For driven 1D automata: how much likelier the completed array is than
/// the states with `m` rule cells still blank, against `r^m`.
fn bias_table(c: &Construction, g: &StateGraph, p: &[f64]) -> Result<Option<String>> {
    if !matches!(c.meta, Meta::Bca1d(_) | Meta::Transformer(_)) {
        return Ok(None);
    }
    let blanks = |a: &Assembly| -> Result<usize> {
        let Readout::Bca1d(r) = readout(c, a)? else { unreachable!("1D readout") };
        Ok(r.cells.iter().flatten().filter(|c| c.is_none()).count())
    };
    let m: Vec<usize> = g.states.iter().map(blanks).collect::<Result<_>>()?;
    let Some(full) = m.iter().position(|&m| m == 0) else { return Ok(None) };
    let mut out = format!("[bias]  # r {}\n# blanks states min_ratio max_ratio r^m\n", format::fmt_real(c.bias.r));
    let top = *m.iter().max().expect("nonempty");
    for k in 1..=top {
        let ratios: Vec<f64> = (0..g.len()).filter(|&i| m[i] == k).map(|i| p[full] / p[i]).collect();
        if ratios.is_empty() {
            continue;
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            out,
            "{k} {} {} {} {}",
            ratios.len(),
            format::fmt_real(lo),
            format::fmt_real(hi),
            format::fmt_real(c.bias.r.powi(k as i32))
        );
    }
    Ok(Some(out))
}

fn balance_report(l: &Loaded, cap: usize) -> Result<(String, String)> {
    let g = enumerate_state_space(&l.system, &l.file.assembly, cap);
    let rep = check_detailed_balance(&l.system, &g)?;
    let pass = rep.pass && !g.truncated;
    let mut out = header("balance");
    let _ = writeln!(out, "pass {pass}\nstates {}\nedges {}\ntruncated {}", g.len(), g.edges.len(), g.truncated);
    let _ = writeln!(out, "pairs_checked {}", rep.pairs_checked);
    let _ = writeln!(out, "max_violation {}", format::fmt_real(rep.max_violation));
    let _ = writeln!(out, "missing_reverse {}", rep.missing_reverse.len());
    for &i in &rep.missing_reverse {
        let e = &g.edges[i];
        let _ = writeln!(
            out,
            "edge {} -> {} at {} {} {} -> {}",
            e.from,
            e.to,
            e.pos.col,
            e.pos.row,
            l.system.name(e.displaced),
            l.system.name(e.invader)
        );
    }
    let summary = if pass {
        format!("balance pass, max violation {:e}", rep.max_violation)
    } else if !rep.missing_reverse.is_empty() {
        format!("balance fail, {} edges without a reverse", rep.missing_reverse.len())
    } else if g.truncated {
        "balance inconclusive, state space truncated".to_string()
    } else {
        format!("balance fail, max violation {:e}", rep.max_violation)
    };
    Ok((out, summary))
}

fn hitting_report(l: &Loaded, target: &str, replicas: usize, cfg: &SimConfig) -> Result<(String, String)> {
    let stats = if target == "complete" {
        let c = l.construction.as_ref().context("target 'complete' needs an assembly compiled by this tool")?;
        is_complete(c, &l.file.assembly)?;
        hitting_time_stats(&l.system, &l.file.assembly, |a| is_complete(c, a).unwrap_or(false), replicas, cfg)?
    } else {
        let spec = target.strip_prefix("cell:").context("target must be 'complete' or 'cell:COL:ROW=TILE'")?;
        let (at, name) = spec.split_once('=').context("expected cell:COL:ROW=TILE")?;
        let (col, row) = at.split_once(':').context("expected cell:COL:ROW=TILE")?;
        let pos = Pos::new(col.parse()?, row.parse()?);
        if !l.file.assembly.contains(pos) {
            bail!("target cell {pos} is outside the assembly");
        }
        let tile = l.system.require_tile(name)?;
        hitting_time_stats(&l.system, &l.file.assembly, |a| a.get(pos) == tile, replicas, cfg)?
    };
    let mut out = header("hitting");
    let _ = writeln!(out, "target {target}\nreplicas {}\ncensored {}", stats.replicas.len(), stats.censored);
    let _ = writeln!(out, "mean_time {}", format::fmt_real(stats.mean));
    let _ = writeln!(out, "stderr {}", format::fmt_real(stats.stderr));
    let _ = writeln!(out, "mean_events {}", format::fmt_real(stats.mean_events));
    out.push_str("[replicas]  # seed time events\n");
    for r in &stats.replicas {
        let t = r.time.map_or_else(|| "censored".into(), format::fmt_real);
        let _ = writeln!(out, "{} {t} {}", r.seed, r.events);
    }
    let summary = format!(
        "mean hitting time {:.6} over {} replicas ({} censored)",
        stats.mean,
        stats.replicas.len() - stats.censored,
        stats.censored
    );
    Ok((out, summary))
}
