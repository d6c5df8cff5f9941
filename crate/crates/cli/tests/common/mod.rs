//! Shared helpers for the CLI integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

pub fn fixture(name: &str) -> String {
    dir("fixtures").join(name).to_string_lossy().into_owned()
}

/// Runs the binary with an explicit thread count; returns (exit code, stdout, stderr).
pub fn run(args: &[&str], threads: usize) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ffvc"))
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

pub fn cases() -> Vec<(&'static str, Vec<String>)> {
    let bad = fixture("badset3.pts");
    let small = fixture("small.conf");
    let full = fixture("full.conf");
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        ("gen_full", v(&["gen", "--q", "3", "--d", "2", "--gen", "full"])),
        ("gen_random", v(&["gen", "--q", "5", "--d", "2", "--gen", "random-exact", "--size", "7", "--seed", "42"])),
        ("gen_density", v(&["gen", "--q", "3", "--d", "3", "--gen", "random-density", "--density", "0.3", "--seed", "5"])),
        ("gen_planes", v(&["gen", "--q", "3", "--d", "2", "--gen", "union-hyperplanes", "--planes", "(1,0)=1;(0,1)=2"])),
        ("gen_json", v(&["gen", "--q", "3", "--d", "2", "--gen", "explicit", "--points", "(2,2);(1,1);(2,0)", "--format", "json"])),
        ("edges_full", v(&["edges", "--q", "3", "--d", "3", "--t", "1", "--gen", "full"])),
        ("edges_point", v(&["edges", "--q", "3", "--d", "2", "--t", "1", "--gen", "explicit", "--points", "(1,1)"])),
        ("edges_json", v(&["edges", "--t", "1", "--in", &bad, "--format", "json"])),
        ("edges_csv", v(&["edges", "--q", "7", "--d", "3", "--t", "3", "--gen", "random-exact", "--size", "60", "--seed", "3", "--format", "csv"])),
        ("stars_full", v(&["stars", "--q", "5", "--d", "3", "--t", "1", "--gen", "full"])),
        ("stars_k2", v(&["stars", "--q", "7", "--d", "3", "--t", "2", "--gen", "random-exact", "--size", "40", "--seed", "8", "--k", "2"])),
        ("stars_json", v(&["stars", "--q", "3", "--d", "2", "--t", "1", "--gen", "full", "--format", "json"])),
        ("shatter_bad", v(&["shatter", "--q", "3", "--d", "2", "--t", "1", "--in", &bad, "--set", "(1,1);(2,0)"])),
        ("shatter_good", v(&["shatter", "--q", "3", "--d", "3", "--t", "1", "--gen", "full", "--set", "(1,0,0);(0,1,0);(0,0,1)"])),
        ("shatter_json", v(&["shatter", "--t", "1", "--in", &bad, "--set", "(2,0);(1,1)", "--format", "json"])),
        ("vcdim_full", v(&["vcdim", "--q", "3", "--d", "3", "--t", "1", "--gen", "full", "--mode", "exhaustive"])),
        ("vcdim_bad", v(&["vcdim", "--t", "1", "--in", &bad])),
        ("vcdim_star", v(&["vcdim", "--q", "7", "--d", "3", "--t", "1", "--gen", "random-exact", "--size", "130", "--seed", "2", "--mode", "star-guided"])),
        ("vcdim_json", v(&["vcdim", "--q", "5", "--d", "2", "--t", "4", "--gen", "full", "--mode", "star-guided", "--seed", "9", "--format", "json"])),
        ("badstars", v(&["badstars", "--q", "5", "--d", "3", "--t", "1", "--gen", "random-exact", "--size", "30", "--seed", "11"])),
        ("badstars_json", v(&["badstars", "--q", "3", "--d", "3", "--t", "2", "--gen", "full", "--format", "json"])),
        ("sweep_csv", v(&["sweep", "--config", &small, "--no-timing"])),
        ("sweep_json", v(&["sweep", "--config", &full, "--no-timing", "--format", "json"])),
        ("verify_fast", v(&["verify"])),
    ]
}

/// Names of golden cases whose current output differs from the stored file.
pub fn golden_mismatches() -> Vec<&'static str> {
    cases()
        .into_iter()
        .filter(|(name, args)| {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let (code, stdout, _) = run(&args, 2);
            let expected = std::fs::read_to_string(dir("golden").join(format!("{name}.out"))).unwrap_or_default();
            code != 0 || expected != stdout
        })
        .map(|(name, _)| name)
        .collect()
}
