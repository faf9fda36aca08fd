#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use satidi::compilers::Construction;
use satidi_cli::recipe::parse_recipe;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn satidi(dir: &Path, args: &[&str]) -> Run {
    let out: Output = Command::new(env!("CARGO_BIN_EXE_satidi"))
        .args(args)
        .current_dir(dir)
        .env_remove("SATIDI_OUT_DIR")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Runs `compile` with the given recipe into `dir` under `name` and returns
/// the system and assembly paths.
pub fn compile(dir: &Path, name: &str, recipe: &[&str]) -> (PathBuf, PathBuf) {
    let mut args = vec!["compile", "--out-dir", ".", "--name", name];
    args.extend_from_slice(recipe);
    let r = satidi(dir, &args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    (dir.join(format!("{name}.system")), dir.join(format!("{name}.assembly")))
}

/// Recipes covering every construction kind and rule.
pub const CORPUS: &[&str] = &[
    "wire --kind reversible --length 6",
    "wire --kind irreversible --length 5 --heading north",
    "wire --kind latching --length 7 --bit 1",
    "wire --kind latching --length 4 --heading north",
    "cross --arm 3",
    "circuit --preset xor9",
    "circuit --preset mixed9 --west 101100101 --south 011010011",
    "circuit --gates XOR,NOR/NANDXOR,WIREPASS --west 10 --south 01",
    "circuit --gates FANOUT,NOR --family NOR,WIRECROSS,WIREPASS,FANOUT --west 1 --south 10",
    "bca1d --rule xor --n 6",
    "bca1d --rule table:3:00,12,21,11,20,02,22,01,10 --left 210 --bottom 01 --r 4",
    "transformer --preset mixed9",
    "transformer --preset mixed9 --prune",
    "bca2d --cols 4 --rows 4 --balls 3:3,4:4",
    "bca2d --rule critters --cols 3 --rows 3 --random 7",
    "bca2d --cols 5 --rows 4 --sources",
    "bca2d --entropic 16",
];

pub fn construction(recipe: &str) -> (Construction, Vec<String>) {
    let args: Vec<String> = recipe.split_whitespace().map(String::from).collect();
    parse_recipe(&args).unwrap().build().unwrap()
}

pub fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}
