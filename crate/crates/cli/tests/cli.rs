use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qpast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpast"))
        .args(args)
        .env_remove("QP_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_prints_five_scenarios() {
    let o = qpast(&["list"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let names: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with(' '))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(names, ["two_slit", "s_wave_detection", "heisenberg_past", "etp_timing", "cat"]);
    assert!(text.contains("ensemble.n"));
}

#[test]
fn describe_known_and_unknown() {
    let o = qpast(&["describe", "cat"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("candidates_above_half"));
    assert_eq!(code(&qpast(&["describe", "nosuch"])), 2);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(code(&qpast(&["run", "nosuch", "--out", out])), 2);
    assert_eq!(code(&qpast(&["run", "cat", "--out", out, "--set", "nosuch=1"])), 2);
    assert_eq!(code(&qpast(&["run", "cat", "--out", out, "--set", "threshold=abc"])), 2);
    assert_eq!(code(&qpast(&["frobnicate"])), 2);
    assert_eq!(code(&qpast(&["run", "cat", "--seed", "-1"])), 2);

    let spec = dir.path().join("spec.json");
    fs::write(&spec, "{ not json").unwrap();
    assert_eq!(code(&qpast(&["run", "cat", "--out", out, "--spec", spec.to_str().unwrap()])), 2);
    fs::write(&spec, r#"{"scenario": "two_slit"}"#).unwrap();
    assert_eq!(code(&qpast(&["run", "cat", "--out", out, "--spec", spec.to_str().unwrap()])), 2);
    assert!(!Path::new(out).exists());
}

#[test]
fn existing_output_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cat");
    let out = out.to_str().unwrap();
    assert_eq!(code(&qpast(&["run", "cat", "--out", out])), 0);
    assert_eq!(code(&qpast(&["run", "cat", "--out", out])), 2);
    assert_eq!(code(&qpast(&["run", "cat", "--out", out, "--force"])), 0);
}

#[test]
fn failing_checks_exit_1_and_runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    // a threshold of 1 leaves no candidate above it, so the past is not ambiguous
    let o = qpast(&["run", "cat", "--out", a.to_str().unwrap(), "--set", "threshold=1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("failed: ambiguous"));

    let b = dir.path().join("b");
    let missing = dir.path().join("missing.json");
    let model = format!("model={}", missing.display());
    assert_eq!(code(&qpast(&["run", "cat", "--out", b.to_str().unwrap(), "--set", &model])), 3);
}

#[test]
fn spec_file_and_overrides_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"scenario": "cat", "seed": 5, "params": {"time": {"total": 2.0}}}"#).unwrap();
    let out = dir.path().join("run");
    let o = qpast(&[
        "run",
        "cat",
        "--spec",
        spec.to_str().unwrap(),
        "--set",
        "toy.phase=pi",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["inputs"]["time.total"], 2.0);
    assert_eq!(report["inputs"]["toy.phase"], std::f64::consts::PI);
}

#[test]
fn two_slit_runs_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for (run, threads) in [("a", "2"), ("b", "3")] {
        let out = dir.path().join(run);
        let o = qpast(&[
            "run",
            "two_slit",
            "--seed",
            "42",
            "--threads",
            threads,
            "--set",
            "ensemble.n=2000",
            "--set",
            "screen.bins=64",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        csv.push((
            fs::read(out.join("trajectories.csv")).unwrap(),
            fs::read(out.join("screen_histogram.csv")).unwrap(),
        ));
    }
    assert!(!csv[0].0.is_empty());
    assert_eq!(csv[0], csv[1]);
}
