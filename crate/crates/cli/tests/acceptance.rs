//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Built without the test harness so the lines always print.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use satidi::blockca::*;
use satidi::compilers::*;
use satidi::engine::*;
use satidi::model::{audit_warnings, validate_displacement, Assembly};
use satidi_cli::format::*;

use common::{construction, satidi, tempdir, CORPUS};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn driven() -> Bias {
    Bias { r: DEFAULT_R, rule_concentration: 1.0 }
}

fn bca1d_cells(c: &Construction, a: &Assembly) -> Bca1dReadout {
    match readout(c, a).unwrap() {
        Readout::Bca1d(r) => r,
        other => panic!("{other:?}"),
    }
}

fn circuit_cells(c: &Construction, a: &Assembly) -> CircuitReadout {
    match readout(c, a).unwrap() {
        Readout::Circuit(r) => r,
        other => panic!("{other:?}"),
    }
}

fn front(c: &Construction, a: &Assembly) -> usize {
    match readout(c, a).unwrap() {
        Readout::Wire { front, .. } => front,
        other => panic!("{other:?}"),
    }
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2)).collect()
}

/// Time-weighted occupancy of each enumerated state along one run.
fn occupancy(c: &Construction, g: &StateGraph, seed: u64, events: u64) -> Vec<f64> {
    let mut sim = Simulator::new(&c.system, c.initial.clone(), seed, false).unwrap();
    let mut occ = vec![0.0; g.len()];
    let mut state = g.index_of(sim.assembly()).unwrap();
    let mut t = 0.0;
    for _ in 0..events {
        let Some(e) = sim.step(None) else { break };
        occ[state] += e.time - t;
        t = e.time;
        state = g.index_of(sim.assembly()).unwrap();
    }
    occ.iter().map(|x| x / t).collect()
}

fn c1_detailed_balance() -> Outcome {
    let mut cases: Vec<(String, Construction)> = (2..=6)
        .map(|n| (format!("wire {n}"), compile_wire::<f64>(n, WireKind::Reversible, Heading::East, 0).unwrap()))
        .collect();
    let inp = Bca1dInputs { left: vec![1, 0], bottom: vec![0, 1] };
    let bias = Bias { r: 3.0, rule_concentration: 0.1 };
    cases.push(("bca1d 2x2".into(), compile_bca1d::<f64>(&BlockRule1D::xor(), &inp, bias).unwrap()));
    let rows: Vec<(String, f64, f64, bool)> = cases
        .par_iter()
        .map(|(name, c)| {
            let g = enumerate_state_space(&c.system, &c.initial, 10_000);
            let st = stationary_distribution(&c.system, &g).unwrap();
            let bal = check_detailed_balance(&c.system, &g).unwrap();
            let occ = occupancy(c, &g, 1, 1_000_000);
            let tv = 0.5 * occ.iter().zip(&st.probabilities).map(|(a, b)| (a - b).abs()).sum::<f64>();
            (name.clone(), st.max_relative_gap(), tv, bal.pass)
        })
        .collect();
    let ok = rows.iter().all(|r| r.1 < 1e-9 && r.2 < 0.05 && r.3);
    let worst_gap = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst_tv = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    check(ok, format!("{} systems, max gap {worst_gap:.1e}, max TV {worst_tv:.4}", rows.len()))
}

fn c2_kinetic_scaling() -> Outcome {
    let sizes = [8usize, 16, 32, 64];
    let mut out = Vec::new();
    let mut ok = true;
    for (kind, expect) in [(WireKind::Reversible, 2.0), (WireKind::IrreversibleNaive, 1.0)] {
        let mut means = Vec::new();
        let mut censored = 0.0f64;
        for &n in &sizes {
            let c = compile_wire::<f64>(n, kind, Heading::East, 0).unwrap();
            let cfg = SimConfig::events(1000, 10_000_000);
            let st = hitting_time_stats(&c.system, &c.initial, |a| front(&c, a) == n - 1, 200, &cfg).unwrap();
            censored = censored.max(st.censored_fraction());
            means.push(st.mean);
        }
        let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        let slope = log_log_slope(&xs, &means);
        ok &= (slope - expect).abs() <= 0.3 && censored < 0.05;
        out.push(format!("{kind:?} slope {slope:.3} censored {censored:.3}"));
    }
    check(ok, out.join(", "))
}

fn c3_warnings() -> Outcome {
    let cross = compile_naive_wire_cross::<f64>(3).unwrap();
    let g = enumerate_state_space(&cross.system, &cross.initial, 100_000);
    let mut kinds = BTreeSet::new();
    for a in &g.states {
        for w in audit_warnings(&cross.system, a) {
            kinds.insert(cross.classify_cross_warning(&w));
        }
    }
    let cross_ok = !g.truncated && kinds.len() == 2;

    // wires run to their event cap: once the front arrives, the last signal
    // may keep flickering against the cap, so they need not stall
    let mut runs: Vec<(Construction, Option<u8>)> = Vec::new();
    for bit in 0..2 {
        for heading in [Heading::East, Heading::North] {
            runs.push((compile_wire::<f64>(12, WireKind::Latching, heading, bit).unwrap(), Some(bit)));
        }
    }
    runs.push((compile_circuit::<f64>(&xor_array(9)).unwrap(), None));
    runs.push((compile_circuit::<f64>(&mixed_circuit_9x9()).unwrap(), None));
    let jobs: Vec<(usize, u64)> = (0..runs.len()).flat_map(|i| (0..4).map(move |s| (i, s))).collect();
    let results: Vec<(usize, bool)> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let (c, bit) = &runs[i];
            let audited = |max| SimConfig::events(seed, max).with_record(Record::FinalOnly).with_audit(1);
            match bit {
                Some(bit) => {
                    let tr = simulate(&c.system, &c.initial, &audited(200_000)).unwrap();
                    let arrived = readout(c, &tr.final_assembly).unwrap() == Readout::Wire { front: 11, bit: Some(*bit) };
                    (tr.warnings.len(), arrived)
                }
                None => {
                    let done = |a: &Assembly| circuit_cells(c, a).completeness == 1.0;
                    let tr = simulate_until(&c.system, &c.initial, &audited(5_000_000), done).unwrap();
                    (tr.warnings.len(), tr.status == Status::Target)
                }
            }
        })
        .collect();
    let warned: usize = results.iter().map(|r| r.0).sum();
    let finished = results.iter().all(|r| r.1);
    check(
        cross_ok && warned == 0 && finished,
        format!("cross kinds {kinds:?}; {} audited runs, {warned} warnings, all complete {finished}", results.len()),
    )
}

fn c4_tile_counts() -> Outcome {
    let family = |f: GateFamily| {
        let spec = CircuitSpec { family: f.clone(), ..CircuitSpec::new(vec![vec![f.kinds()[0]]], vec![0], vec![0]) };
        compile_circuit::<f64>(&spec).unwrap().system.tile_count()
    };
    let fam = [family(GateFamily::five_gate()), family(GateFamily::with_fanout()), family(GateFamily::minimal())];
    let mut ok = fam == [66, 75, 57];

    let inp = Bca1dInputs { left: vec![0, 0], bottom: vec![0, 0] };
    for n in 1..=5usize {
        let rule = BlockRule1D::from_fn(n, |x, y| (y, x)).unwrap();
        let c = compile_bca1d::<f64>(&rule, &inp, driven()).unwrap();
        ok &= c.system.tile_count() == 2 + 2 * n + n * n;
    }
    let binary = compile_bca1d::<f64>(&BlockRule1D::xor(), &inp, driven()).unwrap().system.tile_count();
    ok &= binary == 10;

    let (rule, pattern, inputs) = circuit_transformer(&mixed_circuit_9x9()).unwrap();
    let (n, m) = (rule.states(), rule.patterns());
    let full = compile_bca1d_transformer::<f64>(&rule, &pattern, &inputs, driven(), &TileSelection::Full).unwrap();
    // the terminator is one tile on top of the formula
    let unpruned = full.system.tile_count() - 1;
    let all = Bca1dInputs::exhaustive(2, 9, 9).unwrap();
    let pruned = compile_bca1d_transformer::<f64>(&rule, &pattern, &inputs, driven(), &TileSelection::ReachableFrom(all))
        .unwrap()
        .system
        .tile_count();
    ok &= unpruned == 2 * n + m * m + n * n * m * m && unpruned == 129 && pruned == 39;
    check(ok, format!("families {fam:?}, bca1d binary {binary}, transformer {unpruned} + terminator, pruned {pruned}"))
}

fn c5_circuits() -> Outcome {
    let spec = xor_array(9);
    let c = compile_circuit::<f64>(&spec).unwrap();
    let cfg = SimConfig::events(3, 5_000_000).with_record(Record::FinalOnly);
    let tr = simulate_until(&c.system, &c.initial, &cfg, |a| circuit_cells(&c, a).completeness == 1.0).unwrap();
    let r = circuit_cells(&c, &tr.final_assembly);
    // the initial signals are a single 1 entering at the corner, so every
    // gate sees the Pascal triangle mod 2, checked here by Lucas' theorem
    let mut xor_ok = r.completeness == 1.0;
    for j in 0..9 {
        for i in 0..9 {
            let (w, s) = r.gates[j][i].unwrap_or((9, 9));
            xor_ok &= (w ^ s) == (i & j == 0) as u8;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let vectors: Vec<(Vec<u8>, Vec<u8>)> = (0..150).map(|_| (random_bits(&mut rng, 9), random_bits(&mut rng, 9))).collect();
    let circuit_agree = vectors[..100]
        .par_iter()
        .enumerate()
        .filter(|(k, (west, south))| {
            let spec = mixed_circuit_9x9().with_inputs(west.clone(), south.clone());
            let expect = spec.evaluate().unwrap();
            let c = compile_circuit::<f64>(&spec).unwrap();
            let cfg = SimConfig::events(*k as u64, 5_000_000).with_record(Record::FinalOnly);
            let tr = simulate_until(&c.system, &c.initial, &cfg, |a| circuit_cells(&c, a).completeness == 1.0).unwrap();
            circuit_cells(&c, &tr.final_assembly).outputs() == Some((expect.east, expect.north))
        })
        .count();
    let transformer_agree = vectors[100..]
        .par_iter()
        .enumerate()
        .filter(|(k, (west, south))| {
            let spec = mixed_circuit_9x9().with_inputs(west.clone(), south.clone());
            let expect = spec.evaluate().unwrap();
            let (rule, pattern, inp) = circuit_transformer(&spec).unwrap();
            let t = compile_bca1d_transformer::<f64>(&rule, &pattern, &inp, driven(), &TileSelection::Full).unwrap();
            let cfg = SimConfig::events(*k as u64, 5_000_000).with_record(Record::FinalOnly);
            let tr = simulate_until(&t.system, &t.initial, &cfg, |a| bca1d_cells(&t, a).completeness == 1.0).unwrap();
            let r = bca1d_cells(&t, &tr.final_assembly);
            if r.completeness < 1.0 {
                return false;
            }
            let east: Vec<u8> = (0..9).map(|j| r.cells[j][8].unwrap()[3] as u8).collect();
            let north: Vec<u8> = (0..9).map(|i| r.cells[8][i].unwrap()[2] as u8).collect();
            (east, north) == (expect.east, expect.north)
        })
        .count();
    check(
        xor_ok && circuit_agree == 100 && transformer_agree == 50,
        format!("xor array oracle {xor_ok}, circuit {circuit_agree}/100, transformer {transformer_agree}/50"),
    )
}

fn c6_bias() -> Outcome {
    let inp = Bca1dInputs { left: vec![1, 0, 1], bottom: vec![0, 1, 1] };
    let mut worst = 0.0f64;
    for r in [2.0, 3.0, 10.0] {
        let c = compile_bca1d::<f64>(&BlockRule1D::xor(), &inp, Bias { r, rule_concentration: 1e-3 }).unwrap();
        let g = enumerate_state_space(&c.system, &c.initial, 10_000);
        let st = stationary_distribution(&c.system, &g).unwrap();
        let filled: Vec<usize> =
            g.states.iter().map(|a| (bca1d_cells(&c, a).completeness * 9.0).round() as usize).collect();
        let top = filled.iter().position(|&d| d == 9).unwrap();
        for (s, &d) in filled.iter().enumerate() {
            let ratio = st.probabilities[top] / st.probabilities[s];
            worst = worst.max((ratio / r.powi((9 - d) as i32) - 1.0).abs());
        }
    }
    let big = Bca1dInputs { left: vec![1, 0, 1, 1, 0, 0, 1, 0], bottom: vec![0, 1, 1, 0, 1, 0, 0, 1] };
    let c = compile_bca1d::<f64>(&BlockRule1D::xor(), &big, driven()).unwrap();
    let done = (0..20u64)
        .into_par_iter()
        .filter(|&seed| {
            let cfg = SimConfig::events(seed, 100_000).with_record(Record::FinalOnly);
            let tr = simulate_until(&c.system, &c.initial, &cfg, |a| bca1d_cells(&c, a).completeness == 1.0).unwrap();
            tr.status == Status::Target
        })
        .count();
    check(
        worst < 1e-6 && done >= 19,
        format!("3x3 exact ratio error {worst:.1e}; 8x8 at r=10 completed {done}/20 within 1e5 events"),
    )
}

fn c7_blockca() -> Outcome {
    let bbm = bbm_rule();
    let crit = critters_rule();
    let tables = bbm.is_bijective() && bbm.conserves(1) && bbm.is_symmetric() && crit.is_bijective();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = Grid2D::new(8, 8);
    for i in 0..g.len() {
        g.set_index(i, (rng.gen_range(0..4) == 0) as Symbol);
    }
    let mut async_ok = true;
    for rule in [&bbm, &crit] {
        let r = check_async_sync_equivalence(rule, &g, 0, Boundary2D::Periodic, 10, 500, 11, None).unwrap();
        async_ok &= r.pass() && r.trials == 10 && r.firings == 500;
    }
    let l = Bca2dLayout::new(4, 4).unwrap();
    let mut cells = l.grid();
    let mid = cells.live_cells().nth(cells.live_cells().count() / 2).unwrap();
    cells.set_index(mid, 1);
    let c = compile_bca2d::<f64>(&Bca2dSpec::new(bbm, l, cells)).unwrap();
    let rep = check_bca2d_bisimulation(&c, 100_000).unwrap();
    check(
        tables && async_ok && rep.pass(),
        format!(
            "tables {tables}, async/sync {async_ok}, bisimulation {} arrow / {} tile states pass {}",
            rep.arrow_states,
            rep.tile_states,
            rep.pass()
        ),
    )
}

fn c8_reversibility() -> Outcome {
    let recipes = ["bca2d --rule bbm --cols 8 --rows 8 --random 4", "bca2d --rule critters --cols 6 --rows 6 --random 2"];
    let mut specs: Vec<(String, Construction)> = recipes.iter().map(|r| (r.to_string(), construction(r).0)).collect();
    let (walled, _) = entropic_spec(64).unwrap();
    specs.push(("entropic 64".into(), compile_bca2d::<f64>(&walled).unwrap()));
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, c) in &specs {
        let tr = simulate(&c.system, &c.initial, &SimConfig::events(21, 10_000)).unwrap();
        let constant = tr.event_count == 10_000 && tr.energy.iter().all(|&e| e == tr.energy[0]);
        let mut a = c.initial.clone();
        let mut reverses = true;
        for e in &tr.events {
            let fwd = validate_displacement(&c.system, &a, e.pos, e.invader).unwrap().reaction().unwrap();
            satidi::model::apply_reaction_in_place(&c.system, &mut a, &fwd).unwrap();
            reverses &= validate_displacement(&c.system, &a, e.pos, e.displaced).unwrap().is_valid();
        }
        let back = tr.replay_backward(&c.system).unwrap() == c.initial;
        ok &= constant && reverses && back && a == tr.final_assembly;
        notes.push(format!("{name}: energy constant {constant}, reverses {reverses}, backward {back}"));
    }
    check(ok, notes.join("; "))
}

fn c9_entropic() -> Outcome {
    let mut means = Vec::new();
    let mut isolated = true;
    for area in ENTROPIC_GAS_AREAS {
        let (spec, _) = entropic_spec(area).unwrap();
        let c = compile_bca2d::<f64>(&spec).unwrap();
        let regions = spec.regions.clone().unwrap();
        let circuit: Vec<usize> =
            spec.initial.live_cells().filter(|&i| regions[i] == Region::Circuit).collect();
        let runs: Vec<(f64, bool)> = (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let tr = simulate(&c.system, &c.initial, &SimConfig::events(seed, 10_000)).unwrap();
                let mut sheet = extract_time_sheet(&c, &c.initial).unwrap();
                let start = sheet.clone();
                let mut clean = true;
                for e in &tr.events {
                    for i in track_time_sheet(&c, &mut sheet, e.pos, e.displaced, e.invader).unwrap().into_iter().flatten() {
                        clean &= regions[i] != Region::Wall || sheet.values[i] == start.values[i];
                    }
                }
                let read = extract_time_sheet_near(&c, &tr.final_assembly, &sheet).unwrap();
                clean &= read.consistent && read.values == sheet.values && read.times == sheet.times;
                let advance = circuit.iter().map(|&i| (sheet.times[i] - start.times[i]) as f64).sum::<f64>()
                    / circuit.len() as f64;
                (advance, clean)
            })
            .collect();
        isolated &= runs.iter().all(|r| r.1);
        means.push(runs.iter().map(|r| r.0).sum::<f64>() / runs.len() as f64);
    }
    let monotone = means[0] > 0.0 && means.windows(2).all(|w| w[0] <= w[1]);
    check(isolated && monotone, format!("isolation {isolated}, mean circuit advance {means:.3?} over gas {ENTROPIC_GAS_AREAS:?}"))
}

fn c10_determinism() -> Outcome {
    let mut ok = true;
    let mut count = 0;
    let mut broken = Vec::new();
    for recipe in CORPUS {
        let before = ok;
        let (c, args) = construction(recipe);
        let sys_text = write_system(&c.system).unwrap();
        let sys = parse_system::<f64>(&sys_text).unwrap();
        ok &= write_system(&sys).unwrap() == sys_text;

        let file = AssemblyFile { assembly: c.initial.clone(), construction: Some(args), readout_map: Some(c.tags.clone()) };
        let asm_text = write_assembly(&c.system, &file).unwrap();
        ok &= parse_assembly(&c.system, &asm_text).unwrap() == file;

        let cfg = SimConfig::events(9, 400).with_audit(1);
        let a = write_trajectory(&c.system, &cfg, &simulate(&c.system, &c.initial, &cfg).unwrap()).unwrap();
        let b = write_trajectory(&c.system, &cfg, &simulate(&c.system, &c.initial, &cfg).unwrap()).unwrap();
        let (cfg2, tr2) = parse_trajectory(&c.system, &c.initial, &a).unwrap();
        ok &= a == b && write_trajectory(&c.system, &cfg2, &tr2).unwrap() == a;
        if before && !ok {
            broken.push(*recipe);
        }
        count += 1;
    }

    let dir = tempdir();
    common::compile(dir.path(), "m", &["bca2d", "--rule", "bbm", "--cols", "6", "--rows", "6", "--random", "3"]);
    let mut files = Vec::new();
    for out in ["one.trajectory", "two.trajectory"] {
        let r = satidi(
            dir.path(),
            &["simulate", "--system", "m.system", "--assembly", "m.assembly", "--seed", "12", "--max-events", "2000", "--out", out],
        );
        ok &= r.code == 0;
        files.push(fs::read(dir.path().join(out)).unwrap_or_default());
    }
    ok &= !files[0].is_empty() && files[0] == files[1];
    check(ok, format!("{count} corpus constructions, failing {broken:?}; binary reruns byte-identical {}", files[0] == files[1]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("detailed balance", c1_detailed_balance),
        ("kinetic scaling", c2_kinetic_scaling),
        ("warning discipline", c3_warnings),
        ("tile counts", c4_tile_counts),
        ("circuit correctness", c5_circuits),
        ("1D bias", c6_bias),
        ("2D block automata", c7_blockca),
        ("reversibility", c8_reversibility),
        ("entropic driving", c9_entropic),
        ("determinism and round trip", c10_determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS {name}: {d} ({secs:.1}s)", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {d} ({secs:.1}s)", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
