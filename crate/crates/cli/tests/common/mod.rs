#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(name: &str) -> PathBuf {
    repo_root().join("fixtures").join(name)
}

pub fn golden_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn fusebench(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fusebench"));
    cmd.args(args).env_remove("FUSEBENCH_THREADS");
    if let Some(n) = threads {
        cmd.args(["--threads", &n.to_string()]);
    }
    cmd.output().expect("spawn fusebench")
}

/// Runs a command and fails with its stderr unless it exits with `code`.
pub fn expect_code(args: &[&str], threads: Option<usize>, code: i32) -> Output {
    let out = fusebench(args, threads);
    assert_eq!(
        out.status.code(),
        Some(code),
        "fusebench {args:?}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// `synth` (+ `score` for feature fixtures) + `sweep` + `evaluate` + `report`
/// into `dir`. Returns the concatenated stdout.
pub fn pipeline(fixture_name: &str, dir: &Path, threads: Option<usize>) -> String {
    let fx = fixture(fixture_name);
    let d = dir.to_str().unwrap();
    let cfg = dir.join("run.toml");
    let c = cfg.to_str().unwrap();
    let mut stdout = String::new();
    let mut step = |args: &[&str]| {
        let o = expect_code(args, threads, 0);
        stdout.push_str(&String::from_utf8_lossy(&o.stdout));
    };
    step(&["synth", "--fixture", fx.to_str().unwrap(), "--out", d]);
    if dir.join("features").is_dir() {
        step(&["--config", c, "score"]);
    }
    step(&["--config", c, "sweep"]);
    step(&["--config", c, "evaluate"]);
    step(&["--config", c, "report"]);
    stdout
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Distinct thresholds in ascending order, bracketed by the infinities.
fn thresholds(genuine: &[f64], impostor: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup();
    let mut all = vec![f64::NEG_INFINITY];
    all.extend(t);
    all.push(f64::INFINITY);
    all
}

/// `(false accepts, false rejects)` at threshold `t` by direct counting.
fn counts(genuine: &[f64], impostor: &[f64], t: f64) -> (usize, usize) {
    let fa = impostor.iter().filter(|&&s| s >= t).count();
    let fr = genuine.iter().filter(|&&s| s < t).count();
    (fa, fr)
}

/// EER by exhaustive threshold scan: the first threshold where FAR equals
/// FRR, else the linear crossing between the bracketing thresholds.
pub fn oracle_eer(genuine: &[f64], impostor: &[f64]) -> f64 {
    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    let mut prev: Option<(f64, f64)> = None;
    for t in thresholds(genuine, impostor) {
        let (fa, fr) = counts(genuine, impostor, t);
        if fa * genuine.len() == fr * impostor.len() {
            return fa as f64 / ni;
        }
        let (far, frr) = (fa as f64 / ni, fr as f64 / ng);
        if let Some((pfar, pfrr)) = prev {
            let (dp, dq) = (pfar - pfrr, far - frr);
            if dp > 0.0 && dq < 0.0 {
                let a = dp / (dp - dq);
                return pfar + a * (far - pfar);
            }
        }
        prev = Some((far, frr));
    }
    unreachable!("FAR - FRR goes from 1 to -1")
}

/// FRR at the lowest threshold with FAR <= target, by exhaustive scan.
pub fn oracle_frr_at_far(genuine: &[f64], impostor: &[f64], target: f64) -> f64 {
    for t in thresholds(genuine, impostor) {
        let (fa, fr) = counts(genuine, impostor, t);
        if fa as f64 / impostor.len() as f64 <= target {
            return fr as f64 / genuine.len() as f64;
        }
    }
    unreachable!("+inf accepts nothing")
}

/// Parses a score CSV into `(genuine, impostor, absent)` by hand.
pub fn parse_scores(text: &str) -> (Vec<Option<f64>>, Vec<bool>) {
    let mut scores = Vec::new();
    let mut genuine = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        genuine.push(f[5] == "1");
        scores.push(if f[6].is_empty() { None } else { Some(f[6].parse().unwrap()) });
    }
    (scores, genuine)
}
