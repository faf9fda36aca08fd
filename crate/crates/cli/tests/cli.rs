mod common;

use std::fs;
use std::path::Path;

use satidi::blockca::{invert_rule2d, run_bca2d, Boundary2D, Inversion};
use satidi::compilers::Meta;
use satidi_cli::{EXIT_ERROR, EXIT_STALLED, EXIT_WARNINGS};

use common::{compile, construction, satidi, tempdir};

fn tile_lines(system: &Path) -> usize {
    let text = fs::read_to_string(system).unwrap();
    let start = text.find("[tiles]").unwrap();
    let end = text.find("[concentrations]").unwrap();
    text[start..end].lines().skip(1).filter(|l| !l.trim().is_empty()).count()
}

fn paths<'a>(s: &'a Path, a: &'a Path) -> [&'a str; 4] {
    ["--system", s.to_str().unwrap(), "--assembly", a.to_str().unwrap()]
}

#[test]
fn compile_writes_the_documented_tile_counts() {
    let d = tempdir();
    let (s, _) = compile(d.path(), "x", &["bca1d", "--rule", "xor", "--n", "16"]);
    assert_eq!(tile_lines(&s), 10);
    fs::write(d.path().join("five.spec"), "XOR NOR\nWIREPASS NANDXOR\nwest: 01\nsouth: 11\n").unwrap();
    let (s, _) = compile(d.path(), "c", &["circuit", "--spec", "five.spec"]);
    assert_eq!(tile_lines(&s), 66);
    let r = satidi(d.path(), &["compile", "wire", "--kind", "reversible", "--length", "1"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.contains("length"), "{}", r.stderr);
    let r = satidi(d.path(), &["compile", "bca2d", "--entropic", "17"]);
    assert_eq!(r.code, EXIT_ERROR);
}

#[test]
fn compile_is_deterministic_and_honours_the_env_dir() {
    let d = tempdir();
    let (s1, a1) = compile(d.path(), "one", &["transformer", "--preset", "mixed9"]);
    let (s2, a2) = compile(d.path(), "two", &["transformer", "--preset", "mixed9"]);
    assert_eq!(fs::read(&s1).unwrap(), fs::read(&s2).unwrap());
    assert_eq!(fs::read(&a1).unwrap(), fs::read(&a2).unwrap());
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_satidi"))
        .args(["compile", "cross"])
        .current_dir(d.path())
        .env("SATIDI_OUT_DIR", "envdir")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.path().join("envdir/cross.system").exists());
}

const STALLED_SYSTEM: &str = "\
satidi-system 1
k 1
c0 1 M
[strengths]
[tiles]
t  - -  - -  - -  - -
[concentrations]
t 50 nM
";

#[test]
fn stalled_system_reports_zero_events() {
    let d = tempdir();
    fs::write(d.path().join("s.system"), STALLED_SYSTEM).unwrap();
    fs::write(d.path().join("s.assembly"), "satidi-assembly 1\nsize 2 2\n[cells]\nt t\nt t\n").unwrap();
    let r = satidi(d.path(), &["simulate", "--system", "s.system", "--assembly", "s.assembly", "--max-events", "9"]);
    assert_eq!(r.code, EXIT_STALLED);
    assert!(r.stdout.contains("events 0 time 0.0000000000000000e0 status stalled"), "{}", r.stdout);
    let tr = fs::read_to_string(d.path().join("s.trajectory")).unwrap();
    assert!(tr.contains("[events]\n[summary]\nstatus stalled\nevents 0\n"));
}

#[test]
fn fixed_seed_reruns_are_byte_identical() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "w", &["wire", "--kind", "reversible", "--length", "6"]);
    let run = |seed: &str, out: &str| {
        let mut args = vec!["simulate"];
        args.extend(paths(&s, &a));
        args.extend(["--seed", seed, "--max-events", "3000", "--audit-every", "5", "--out", out]);
        assert_eq!(satidi(d.path(), &args).code, 0);
        fs::read(d.path().join(out)).unwrap()
    };
    assert_eq!(run("9", "a.traj"), run("9", "b.traj"));
    assert_ne!(run("9", "a.traj"), run("10", "c.traj"));
}

#[test]
fn replicas_merge_in_index_order() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "w", &["wire", "--kind", "reversible", "--length", "5"]);
    let mut args = vec!["simulate"];
    args.extend(paths(&s, &a));
    args.extend(["--seed", "4", "--max-events", "500", "--replicas", "3"]);
    let r = satidi(d.path(), &args);
    assert_eq!(r.code, 0);
    let seeds: Vec<&str> = r.stdout.lines().map(|l| l.split_whitespace().nth(3).unwrap()).collect();
    assert_eq!(seeds, ["4", "5", "6"]);
    let mut args = vec!["simulate"];
    args.extend(paths(&s, &a));
    args.extend(["--seed", "5", "--max-events", "500", "--out", "single.trajectory"]);
    assert_eq!(satidi(d.path(), &args).code, 0);
    assert_eq!(fs::read(d.path().join("w.r1.trajectory")).unwrap(), fs::read(d.path().join("single.trajectory")).unwrap());
}

#[test]
fn bbm_run_keeps_its_energy_and_replays() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "bbm", &["bca2d", "--cols", "8", "--rows", "8", "--random", "3"]);
    let mut args = vec!["simulate"];
    args.extend(paths(&s, &a));
    args.extend(["--max-events", "10000", "--audit-every", "1"]);
    let r = satidi(d.path(), &args);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("events 10000") && r.stdout.contains("energy constant"), "{}", r.stdout);
    // Every warning reaches stderr with its position and kind.
    let n: usize = r.stdout.split("warnings ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert_eq!(r.stderr.lines().filter(|l| l.contains("missing-mediation at (")).count(), n);
    let mut args = vec!["simulate"];
    args.extend(paths(&s, &a));
    args.extend(["--max-events", "10000", "--audit-every", "1", "--strict", "--out", "again.trajectory"]);
    assert_eq!(satidi(d.path(), &args).code, if n > 0 { EXIT_WARNINGS } else { 0 });
}

#[test]
fn naive_cross_warns_and_latching_wire_does_not() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "x", &["cross", "--arm", "3"]);
    let mut args = vec!["simulate"];
    args.extend(paths(&s, &a));
    args.extend(["--max-events", "2000", "--audit-every", "1", "--strict"]);
    let r = satidi(d.path(), &args);
    assert_eq!(r.code, EXIT_WARNINGS);
    assert!(r.stderr.contains("missing-mediation at ("));

    let (s, a) = compile(d.path(), "l", &["wire", "--kind", "latching", "--length", "6", "--bit", "1"]);
    let mut args = vec!["audit"];
    args.extend(paths(&s, &a));
    args.push("--strict");
    let r = satidi(d.path(), &args);
    assert_eq!((r.code, r.stdout.as_str()), (0, "warnings 0\n"));
}

/// Pascal's triangle mod 2 by the additive recurrence.
fn pascal_image(n: usize) -> String {
    // value of the tile at column i, row j of an (n + 1)^2 array
    let mut v = vec![vec![0u8; n + 1]; n + 1];
    v[1][0] = 1;
    for j in 1..=n {
        for i in 1..=n {
            v[j][i] = v[j][i - 1] ^ v[j - 1][i];
        }
    }
    let mut out = format!("P1\n{} {}\n", n + 1, n + 1);
    for row in v.iter().rev() {
        out.push_str(&row.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "));
        out.push('\n');
    }
    out
}

#[test]
fn completed_xor_automaton_renders_pascal_mod_two() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "x", &["bca1d", "--rule", "xor", "--n", "16"]);
    let mut args = vec!["simulate"];
    args.extend(paths(&s, &a));
    args.extend(["--seed", "1", "--max-events", "1000000", "--until-complete", "--record", "final"]);
    let r = satidi(d.path(), &args);
    assert!(r.stdout.contains("status target"), "{}", r.stdout);
    let mut args = vec!["render"];
    args.extend(paths(&s, &a));
    args.extend(["--trajectory", "x.trajectory", "--style", "grid-image"]);
    let r = satidi(d.path(), &args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout, pascal_image(16));
}

#[test]
fn empty_trajectory_renders_the_initial_state_only() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "x", &["bca1d", "--n", "5"]);
    let mut args = vec!["simulate"];
    args.extend(paths(&s, &a));
    args.extend(["--max-events", "0"]);
    assert_eq!(satidi(d.path(), &args).code, 0);
    let mut args = vec!["render"];
    args.extend(paths(&s, &a));
    args.extend(["--trajectory", "x.trajectory", "--style", "history-strip"]);
    let strip = satidi(d.path(), &args).stdout;
    let mut args = vec!["render"];
    args.extend(paths(&s, &a));
    let initial = satidi(d.path(), &args).stdout;
    assert_eq!(strip, format!("frame 0 event 0 time 0.0000000000000000e0\n{initial}"));
    assert_eq!(strip.matches("frame").count(), 1);
    assert_eq!(initial, "0.....\n0.....\n0.....\n0.....\n1.....\n.00000\n");
}

#[test]
fn bbm_strip_frames_lie_on_the_synchronous_history() {
    let d = tempdir();
    let recipe = ["bca2d", "--cols", "8", "--rows", "8", "--random", "5"];
    let (s, a) = compile(d.path(), "b", &recipe);
    let mut args = vec!["simulate"];
    args.extend(paths(&s, &a));
    args.extend(["--seed", "2", "--max-events", "10000"]);
    assert_eq!(satidi(d.path(), &args).code, 0);
    let mut args = vec!["render"];
    args.extend(paths(&s, &a));
    args.extend(["--trajectory", "b.trajectory", "--style", "history-strip", "--every", "1000"]);
    let r = satidi(d.path(), &args);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let (c, _) = construction(&recipe.join(" "));
    let Meta::Bca2d(m) = &c.meta else { panic!() };
    let spec = &m.spec;
    let steps = 200;
    let fwd = run_bca2d(&spec.rule, &spec.initial, steps, spec.parity0, Boundary2D::Bounded).unwrap();
    let Inversion::Bijective(inv) = invert_rule2d(&spec.rule) else { panic!() };
    let back = run_bca2d(&inv, &spec.initial, steps, spec.parity0 ^ 1, Boundary2D::Bounded).unwrap();
    let (w, h) = (spec.initial.width(), spec.initial.height());

    let frames: Vec<&str> = r.stdout.split("frame ").skip(1).collect();
    assert_eq!(frames.len(), 11);
    let mut advanced = false;
    for f in frames {
        let lines: Vec<&str> = f.lines().collect();
        let values = &lines[1..=h];
        assert_eq!(lines[h + 1], "[times]");
        let times = &lines[h + 2..2 * h + 2];
        for y in 0..h {
            let vrow: Vec<char> = values[h - 1 - y].chars().collect();
            let trow: Vec<&str> = times[h - 1 - y].split(' ').collect();
            for x in 0..w {
                let i = spec.initial.index(x, y);
                if !spec.initial.exists(i) {
                    assert_eq!((vrow[x], trow[x]), ('.', "."));
                    continue;
                }
                let t: i64 = trow[x].parse().unwrap();
                advanced |= t != 0;
                let expect = if t >= 0 { fwd[t as usize].get_index(i) } else { back[(-t) as usize].get_index(i) };
                assert_eq!(vrow[x].to_digit(10).unwrap() as u16, expect, "cell ({x}, {y}) at local time {t}");
            }
        }
    }
    assert!(advanced);
}

#[test]
fn analyze_reports_balance_and_bias() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "w", &["wire", "--kind", "reversible", "--length", "4"]);
    let mut args = vec!["analyze"];
    args.extend(paths(&s, &a));
    args.extend(["--mode", "balance"]);
    let r = satidi(d.path(), &args);
    assert!(r.stdout.starts_with("balance pass, max violation 0e0"), "{}", r.stdout);
    let rep = fs::read_to_string(d.path().join("w.balance.report")).unwrap();
    assert!(rep.contains("pass true\n") && rep.contains("max_violation 0.0000000000000000e0\n"));

    let (s, a) = compile(d.path(), "i", &["wire", "--kind", "irreversible", "--length", "4"]);
    let mut args = vec!["analyze"];
    args.extend(paths(&s, &a));
    args.extend(["--mode", "balance"]);
    let r = satidi(d.path(), &args);
    assert!(r.stdout.starts_with("balance fail, 3 edges without a reverse"), "{}", r.stdout);
    let rep = fs::read_to_string(d.path().join("i.balance.report")).unwrap();
    assert!(rep.contains("pass false\n"));
    assert_eq!(rep.lines().filter(|l| l.starts_with("edge ")).count(), 3);

    let (s, a) = compile(d.path(), "b", &["bca1d", "--left", "10", "--bottom", "01", "--r", "3"]);
    let mut args = vec!["analyze"];
    args.extend(paths(&s, &a));
    args.extend(["--mode", "statespace"]);
    let r = satidi(d.path(), &args);
    assert!(r.stdout.starts_with("6 states"), "{}", r.stdout);
    let rep = fs::read_to_string(d.path().join("b.statespace.report")).unwrap();
    let bias = rep.split("[bias]").nth(1).unwrap();
    let rows: Vec<Vec<f64>> = bias
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.iter().map(|r| r[0] as usize).collect::<Vec<_>>(), [1, 2, 3, 4]);
    for r in rows {
        assert_eq!(r[4], 3f64.powi(r[0] as i32));
        assert!((r[2] / r[4] - 1.0).abs() < 1e-6 && (r[3] / r[4] - 1.0).abs() < 1e-6);
    }

    let mut args = vec!["analyze"];
    args.extend(paths(&s, &a));
    args.extend(["--mode", "statespace", "--cap", "3"]);
    satidi(d.path(), &args);
    let rep = fs::read_to_string(d.path().join("b.statespace.report")).unwrap();
    assert!(rep.contains("truncated true\n"));
}

#[test]
fn analyze_hitting_times() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "w", &["wire", "--kind", "irreversible", "--length", "5"]);
    let mut args = vec!["analyze"];
    args.extend(paths(&s, &a));
    args.extend(["--mode", "hitting", "--target", "complete", "--replicas", "400"]);
    let r = satidi(d.path(), &args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = fs::read_to_string(d.path().join("w.hitting.report")).unwrap();
    let mean: f64 = rep.lines().find_map(|l| l.strip_prefix("mean_time ")).unwrap().parse().unwrap();
    // four unit-rate steps in sequence
    assert!((mean - 4.0).abs() < 0.4, "{mean}");
    assert!(rep.contains("censored 0\n"));
    let mut args = vec!["analyze"];
    args.extend(paths(&s, &a));
    args.extend(["--mode", "hitting", "--target", "cell:1:1=signal", "--replicas", "10"]);
    assert_eq!(satidi(d.path(), &args).code, 0);
    let mut args = vec!["analyze"];
    args.extend(paths(&s, &a));
    args.extend(["--mode", "hitting", "--target", "cell:1:1=nothing"]);
    assert_eq!(satidi(d.path(), &args).code, EXIT_ERROR);
}

#[test]
fn edited_files_are_refused() {
    let d = tempdir();
    let (s, a) = compile(d.path(), "w", &["wire", "--kind", "reversible", "--length", "4"]);
    let text = fs::read_to_string(&s).unwrap();
    fs::write(&s, text.replace("signal 1.0000000000000000e0 M", "signal 2 M")).unwrap();
    let mut args = vec!["render"];
    args.extend(paths(&s, &a));
    let r = satidi(d.path(), &args);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.contains("does not match"), "{}", r.stderr);
    fs::write(&s, "satidi-system 1\nk 0\n").unwrap();
    assert_eq!(satidi(d.path(), &args).code, EXIT_ERROR);
}
