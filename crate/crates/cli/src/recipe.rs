//! Construction recipes: the `compile` subcommands and their canonical
//! argument lists, stored in assembly files so constructions can be rebuilt.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use satidi::blockca::{bbm_rule, critters_rule, parse_rule, BlockRule1D, BlockRule2D, RuleFile, Symbol};
use satidi::compilers::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WireKindArg {
    Reversible,
    Irreversible,
    Latching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeadingArg {
    East,
    North,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CircuitPreset {
    /// 9x9 XOR array.
    Xor9,
    /// 9x9 circuit over NOR, WIRECROSS, WIREPASS and FANOUT.
    Mixed9,
}

/// Where a circuit comes from. Exactly one of the sources must be given;
/// `--west` and `--south` then override the inputs.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CircuitSource {
    /// Gate grid file (rows north first, then `west:` and `south:` lines).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<CircuitPreset>,
    /// Inline gate rows, north first, `/` between rows and `,` between gates.
    #[arg(long)]
    pub gates: Option<String>,
    /// Gate family, comma-separated; defaults to the five-gate family.
    #[arg(long)]
    pub family: Option<String>,
    /// Input bits from the south row up, e.g. `0110`.
    #[arg(long)]
    pub west: Option<String>,
    /// Input bits from the west column on.
    #[arg(long)]
    pub south: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Recipe {
    /// A single wire between a top and a bottom row.
    Wire {
        #[arg(long, value_enum)]
        kind: WireKindArg,
        /// Cells including the input cell; at least 2.
        #[arg(long)]
        length: usize,
        #[arg(long, value_enum, default_value = "east")]
        heading: HeadingArg,
        /// Carried bit of a latching wire.
        #[arg(long, default_value_t = 0)]
        bit: u8,
    },
    /// Two naive wires crossing at a shared gate cell.
    Cross {
        #[arg(long, default_value_t = 3)]
        arm: usize,
    },
    /// Gate array.
    Circuit(CircuitSource),
    /// Space-time history of a 1D block automaton.
    Bca1d {
        /// `xor`, `identity`, a `table:` string or a rule file.
        #[arg(long, default_value = "xor")]
        rule: String,
        /// Square array size when the streams are not given.
        #[arg(long)]
        n: Option<usize>,
        /// Left stream from row 1 up, one symbol per character. Defaults
        /// to a single 1 followed by zeros.
        #[arg(long)]
        left: Option<String>,
        /// Bottom stream from column 1 on. Defaults to zeros.
        #[arg(long)]
        bottom: Option<String>,
        /// Rule to blank concentration ratio.
        #[arg(long, default_value_t = DEFAULT_R)]
        r: f64,
        /// Rule tile concentration in molar.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// A circuit recast as a block automaton transformer.
    Transformer {
        #[command(flatten)]
        source: CircuitSource,
        /// Keep only the tiles reachable from some input vector.
        #[arg(long)]
        prune: bool,
        #[arg(long, default_value_t = DEFAULT_R)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Reversible 2D block automaton on a diamond of tiles.
    Bca2d {
        /// `bbm`, `critters`, a `table:` string or a rule file.
        #[arg(long, default_value = "bbm")]
        rule: String,
        #[arg(long, default_value_t = 4)]
        cols: usize,
        #[arg(long, default_value_t = 4)]
        rows: usize,
        /// Cells holding 1, as `x:y` pairs separated by commas.
        #[arg(long)]
        balls: Option<String>,
        /// Fill a quarter of the cells at random from this seed instead.
        #[arg(long, conflicts_with = "balls")]
        random: Option<u64>,
        /// Turn every edge position into a ball source.
        #[arg(long)]
        sources: bool,
        /// Walled gas-and-circuit layout with a gas of this many cells
        /// (16, 64 or 256); other options are ignored.
        #[arg(long)]
        entropic: Option<usize>,
    },
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct RecipeLine {
    #[command(subcommand)]
    recipe: Recipe,
}

/// Parses a canonical argument list as stored in an assembly file.
pub fn parse_recipe(args: &[String]) -> Result<Recipe> {
    RecipeLine::try_parse_from(args).map(|l| l.recipe).map_err(|e| anyhow::anyhow!("bad construction line: {e}"))
}

fn digit(s: Symbol) -> Result<char> {
    char::from_digit(s as u32, 36).with_context(|| format!("symbol {s} has no single-character form"))
}

fn symbols(s: &str) -> Result<Vec<Symbol>> {
    s.chars()
        .map(|c| c.to_digit(36).map(|d| d as Symbol).with_context(|| format!("bad symbol '{c}'")))
        .collect()
}

fn symbol_text(v: &[Symbol]) -> Result<String> {
    v.iter().map(|&s| digit(s)).collect()
}

fn bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => bail!("bad bit '{c}'"),
        })
        .collect()
}

fn read_rule_file(path: &str) -> Result<RuleFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading rule file {path}"))?;
    Ok(parse_rule(&text)?)
}

/// `table:N:out,out,...` with outputs in input order, one character per symbol.
fn parse_table(s: &str, arity: usize) -> Result<(usize, Vec<Vec<Symbol>>)> {
    let rest = s.strip_prefix("table:").context("not a table")?;
    let (n, outs) = rest.split_once(':').context("expected table:N:...")?;
    let n: usize = n.parse().context("bad alphabet size")?;
    let outs: Vec<Vec<Symbol>> = outs.split(',').map(symbols).collect::<Result<_>>()?;
    if outs.len() != n.pow(arity as u32) || outs.iter().any(|o| o.len() != arity) {
        bail!("table needs {} entries of {arity} symbols", n.pow(arity as u32));
    }
    Ok((n, outs))
}

pub fn rule1d(s: &str) -> Result<BlockRule1D> {
    match s {
        "xor" => Ok(BlockRule1D::xor()),
        "identity" => Ok(BlockRule1D::identity(2)?),
        _ if s.starts_with("table:") => {
            let (n, outs) = parse_table(s, 2)?;
            Ok(BlockRule1D::from_fn(n, |x, y| {
                let o = &outs[x as usize * n + y as usize];
                (o[0], o[1])
            })?)
        }
        _ => match read_rule_file(s)? {
            RuleFile::OneD(r) => Ok(r),
            RuleFile::TwoD(_) => bail!("{s} holds a 2D rule"),
        },
    }
}

pub fn rule2d(s: &str) -> Result<BlockRule2D> {
    match s {
        "bbm" => Ok(bbm_rule()),
        "critters" => Ok(critters_rule()),
        _ if s.starts_with("table:") => {
            let (n, outs) = parse_table(s, 4)?;
            let rule = BlockRule2D::from_fn(n, |b| {
                let i = b.iter().fold(0, |acc, &v| acc * n + v as usize);
                [outs[i][0], outs[i][1], outs[i][2], outs[i][3]]
            })?;
            Ok(rule)
        }
        _ => match read_rule_file(s)? {
            RuleFile::TwoD(r) => Ok(r),
            RuleFile::OneD(_) => bail!("{s} holds a 1D rule"),
        },
    }
}

fn rule1d_text(r: &BlockRule1D) -> Result<String> {
    if *r == BlockRule1D::xor() {
        return Ok("xor".into());
    }
    let n = r.alphabet();
    let mut outs = Vec::new();
    for x in 0..n as Symbol {
        for y in 0..n as Symbol {
            let (f, g) = r.apply(x, y);
            outs.push(symbol_text(&[f, g])?);
        }
    }
    Ok(format!("table:{n}:{}", outs.join(",")))
}

fn rule2d_text(r: &BlockRule2D) -> Result<String> {
    if *r == bbm_rule() {
        return Ok("bbm".into());
    }
    if *r == critters_rule() {
        return Ok("critters".into());
    }
    let outs: Vec<String> = r.blocks().map(|b| symbol_text(&r.apply(b))).collect::<Result<_>>()?;
    Ok(format!("table:{}:{}", r.alphabet(), outs.join(",")))
}

impl CircuitSource {
    pub fn load(&self) -> Result<CircuitSpec> {
        let given = [self.spec.is_some(), self.preset.is_some(), self.gates.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            bail!("give exactly one of --spec, --preset and --gates");
        }
        let mut spec = if let Some(p) = &self.spec {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            text.parse::<CircuitSpec>()?
        } else if let Some(p) = self.preset {
            match p {
                CircuitPreset::Xor9 => xor_array(9),
                CircuitPreset::Mixed9 => mixed_circuit_9x9(),
            }
        } else {
            let gates = self.gates.as_deref().expect("checked");
            let rows: Vec<Vec<GateKind>> = gates
                .split('/')
                .rev()
                .map(|row| row.split(',').map(str::parse).collect::<Result<Vec<_>, _>>())
                .collect::<Result<_, _>>()?;
            let (h, w) = (rows.len(), rows.first().map_or(0, Vec::len));
            CircuitSpec::new(rows, vec![0; h], vec![0; w])
        };
        if let Some(f) = &self.family {
            spec.family = GateFamily::new(f.split(',').map(str::parse).collect::<Result<Vec<GateKind>, _>>()?);
        }
        let west = self.west.as_deref().map(bits).transpose()?.unwrap_or_else(|| spec.west_inputs.clone());
        let south = self.south.as_deref().map(bits).transpose()?.unwrap_or_else(|| spec.south_inputs.clone());
        let spec = spec.with_inputs(west, south);
        spec.validate()?;
        Ok(spec)
    }

    fn canonical(spec: &CircuitSpec) -> Vec<String> {
        let names = |v: &[GateKind]| v.iter().map(|k| k.name()).collect::<Vec<_>>().join(",");
        let rows: Vec<String> = spec.gates.iter().rev().map(|r| names(r)).collect();
        let b = |v: &[u8]| v.iter().map(|b| char::from(b'0' + b)).collect::<String>();
        vec![
            "--gates".into(),
            rows.join("/"),
            "--family".into(),
            names(spec.family.kinds()),
            "--west".into(),
            b(&spec.west_inputs),
            "--south".into(),
            b(&spec.south_inputs),
        ]
    }
}

fn push(args: &mut Vec<String>, key: &str, value: String) {
    args.push(format!("--{key}"));
    args.push(value);
}

fn real(v: f64) -> String {
    format!("{v:?}")
}

/// Cells of every edge position of a layout, as sources.
pub fn edge_sources(l: &Bca2dLayout) -> Vec<(usize, usize)> {
    (0..l.rows)
        .flat_map(|j| (0..l.cols).map(move |i| (i, j)))
        .filter(|&(i, j)| l.real_sides(i, j).iter().filter(|r| !**r).count() == 1)
        .collect()
}

impl Recipe {
    pub fn kind(&self) -> &'static str {
        match self {
            Recipe::Wire { .. } => "wire",
            Recipe::Cross { .. } => "cross",
            Recipe::Circuit(_) => "circuit",
            Recipe::Bca1d { .. } => "bca1d",
            Recipe::Transformer { .. } => "transformer",
            Recipe::Bca2d { .. } => "bca2d",
        }
    }

    /// Compiles the construction and returns it with the canonical
    /// arguments that rebuild it.
    pub fn build(&self) -> Result<(Construction, Vec<String>)> {
        let mut args: Vec<String> = vec![self.kind().into()];
        let c = match self {
            Recipe::Wire { kind, length, heading, bit } => {
                let k = match kind {
                    WireKindArg::Reversible => WireKind::Reversible,
                    WireKindArg::Irreversible => WireKind::IrreversibleNaive,
                    WireKindArg::Latching => WireKind::Latching,
                };
                let h = match heading {
                    HeadingArg::East => Heading::East,
                    HeadingArg::North => Heading::North,
                };
                if *bit > 1 {
                    bail!("bit must be 0 or 1");
                }
                push(&mut args, "kind", kind.to_possible_value().expect("value").get_name().into());
                push(&mut args, "length", length.to_string());
                push(&mut args, "heading", heading.to_possible_value().expect("value").get_name().into());
                push(&mut args, "bit", bit.to_string());
                compile_wire(*length, k, h, *bit)?
            }
            Recipe::Cross { arm } => {
                push(&mut args, "arm", arm.to_string());
                compile_naive_wire_cross(*arm)?
            }
            Recipe::Circuit(src) => {
                let spec = src.load()?;
                let c = compile_circuit(&spec)?;
                args.extend(CircuitSource::canonical(&spec));
                c
            }
            Recipe::Bca1d { rule, n, left, bottom, r, c } => {
                let rule = rule1d(rule)?;
                let size = n.unwrap_or(8);
                let left = match left {
                    Some(s) => symbols(s)?,
                    None => (0..size).map(|i| (i == 0) as Symbol).collect(),
                };
                let bottom = match bottom {
                    Some(s) => symbols(s)?,
                    None => vec![0; size],
                };
                push(&mut args, "rule", rule1d_text(&rule)?);
                push(&mut args, "left", symbol_text(&left)?);
                push(&mut args, "bottom", symbol_text(&bottom)?);
                push(&mut args, "r", real(*r));
                push(&mut args, "c", real(*c));
                compile_bca1d(&rule, &Bca1dInputs { left, bottom }, Bias { r: *r, rule_concentration: *c })?
            }
            Recipe::Transformer { source, prune, r, c } => {
                let spec = source.load()?;
                let (rule, pattern, inputs) = circuit_transformer(&spec)?;
                let selection = if *prune {
                    TileSelection::ReachableFrom(Bca1dInputs::exhaustive(2, spec.rows(), spec.cols())?)
                } else {
                    TileSelection::Full
                };
                args.extend(CircuitSource::canonical(&spec));
                if *prune {
                    args.push("--prune".into());
                }
                args.extend(["--r".into(), real(*r), "--c".into(), real(*c)]);
                compile_bca1d_transformer(&rule, &pattern, &inputs, Bias { r: *r, rule_concentration: *c }, &selection)?
            }
            Recipe::Bca2d { rule, cols, rows, balls, random, sources, entropic } => {
                if let Some(area) = entropic {
                    push(&mut args, "entropic", area.to_string());
                    compile_bca2d(&entropic_spec(*area)?.0)?
                } else {
                    let rule = rule2d(rule)?;
                    let layout = Bca2dLayout::new(*cols, *rows)?;
                    let mut grid = layout.grid();
                    if let Some(seed) = random {
                        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                        let live: Vec<usize> = grid.live_cells().collect();
                        for i in live {
                            if rng.gen_bool(0.25) {
                                grid.set_index(i, 1);
                            }
                        }
                    }
                    for pair in balls.iter().flat_map(|b| b.split(',')).filter(|p| !p.is_empty()) {
                        let (x, y) = pair.split_once(':').with_context(|| format!("bad ball '{pair}'"))?;
                        let (x, y): (usize, usize) = (x.parse()?, y.parse()?);
                        if x >= grid.width() || y >= grid.height() || !grid.exists(grid.index(x, y)) {
                            bail!("ball ({x}, {y}) is outside the layout");
                        }
                        grid.set(x, y, 1);
                    }
                    push(&mut args, "rule", rule2d_text(&rule)?);
                    push(&mut args, "cols", cols.to_string());
                    push(&mut args, "rows", rows.to_string());
                    let ones: Vec<String> = grid
                        .live_cells()
                        .filter(|&i| grid.get_index(i) != 0)
                        .map(|i| {
                            let (x, y) = grid.coords(i);
                            format!("{x}:{y}")
                        })
                        .collect();
                    if grid.live_cells().any(|i| grid.get_index(i) > 1) {
                        bail!("only binary initial grids can be given on the command line");
                    }
                    if !ones.is_empty() {
                        push(&mut args, "balls", ones.join(","));
                    }
                    let mut spec = Bca2dSpec::new(rule, layout, grid);
                    if *sources {
                        args.push("--sources".into());
                        spec = spec.with_sources(edge_sources(&layout));
                    }
                    compile_bca2d(&spec)?
                }
            }
        };
        Ok((c, args))
    }
}
