//! Command-line pipelines: exit codes and byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn occball(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_occball"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = occball(args);
    assert!(
        out.status.success(),
        "occball {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `ok` on a whitespace-separated command line (temporary paths have no spaces).
fn ok_line(line: &str) -> String {
    ok(&line.split_whitespace().collect::<Vec<_>>())
}

/// Runs every seeded subcommand into `dir`.
fn pipeline(dir: &Path) {
    let d = s(dir);
    ok_line(&format!(
        "--seed 4 --out-dir {d} sysid --method fullstate --sensor depth --budget 800"
    ));
    ok_line(&format!(
        "--seed 4 sysid --budget 600 --out {d}/arxhk.json --save-data {d}/data"
    ));
    ok_line(&format!("--out-dir {d} synth --model-in {d}/model.json --no-validate"));
    ok_line(&format!(
        "--seed 2 simulate --controller {d}/controller.json --sensor depth --out {d}/traj.csv"
    ));
    ok_line(&format!(
        "--seed 2 --out-dir {d} eval --controller {d}/controller.json --episodes 5 --sensor rgb"
    ));
    ok_line(&format!(
        "--seed 9 --out-dir {d}/rl train-rl --episodes 3 --history-len 4 --hidden 8 --batch-size 16 --warmup-steps 40"
    ));
    ok_line(&format!(
        "--seed 1 eval --policy {d}/rl/policy.json --episodes 3 --out {d}/eval_rl.json"
    ));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            ));
        }
    }
    out.sort();
    out
}

#[test]
fn seeded_pipelines_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), fb.len());
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na.ends_with(".json") {
            // paths of the temporary directories are recorded in reports
            let strip = |c: &[u8], dir: &Path| String::from_utf8_lossy(c).replace(s(dir), "");
            assert_eq!(strip(ca, a.path()), strip(cb, b.path()), "{na}");
        } else {
            assert_eq!(ca, cb, "{na}");
        }
    }
    for name in [
        "model.json",
        "controller.json",
        "traj.csv",
        "traj.json",
        "eval.json",
        "policy.json",
        "policy.bin",
        "curve.csv",
        "manifest.json",
    ] {
        assert!(fa.iter().any(|(n, _)| n == name), "{name} missing");
    }
}

#[test]
fn limits_table() {
    let out = ok(&["limits", "--fixations", "1.0,0.7"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "ell0,pole,zero,bound");
    assert!(lines[1].starts_with("1,1.0656993"));
    assert!(lines[1].ends_with(",,1"));
    assert!(lines[2].contains(",3.854"));
}

#[test]
fn hard_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!occball(&["sysid", "--sensor", "lidar"]).status.success());
    assert!(!occball(&["synth", "--model-in", s(&dir.path().join("missing.json"))])
        .status
        .success());
    assert!(!occball(&["limits", "--fixations", "1.5"]).status.success());
    let out = occball(&["--out-dir", s(dir.path()), "sysid", "--budget", "5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient data"));
}

#[test]
fn sweep_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"fixations": [0.9], "tiers": ["true_z"], "method": "hinf_fullstate",
            "budgets": [400], "n_eval_episodes": 2, "n_repeats": 2,
            "angle_search": {"tol_deg": 1.0, "max_deg": 15.0, "seed": 0}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    ok(&["--jobs", "2", "--out-dir", s(&out_dir), "sweep", "--spec", s(&spec)]);
    let cells = fs::read_to_string(out_dir.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 3);
    assert!(out_dir.join("max_angle_by_budget.csv").exists());
    assert!(out_dir.join("artifacts").read_dir().unwrap().count() >= 2);
}
