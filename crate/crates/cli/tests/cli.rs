//! End-to-end tests of the command-line interface: exit codes, JSON
//! reports, and file outputs.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectralloop"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spectralloop-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn validate_window_loop_passes() {
    let out = run(&[
        "validate",
        "--example",
        "3.10",
        "--window",
        "4",
        "--grid",
        "128",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["loop"], serde_json::json!(true));
    assert_eq!(v["dim"], serde_json::json!(9));
    assert!(v["max_normality_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn braid_reports_the_cyclic_monodromy() {
    let dir = temp_dir("braid");
    let out = run(&[
        "braid",
        "--example",
        "3.10",
        "--grid",
        "128",
        "--threshold",
        "1e-3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let cycles = report["monodromy"]["cycles"].as_array().unwrap();
    assert_eq!(cycles.len(), 1);
    assert_eq!(cycles[0].as_array().unwrap().len(), 9);
    let csv = fs::read_to_string(dir.join("braid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,track,re,im,abs,certified");
    // 9 tracks at 129 grid points
    assert_eq!(csv.lines().count(), 1 + 9 * 129);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn cascade_fails_continuation_with_limit_zero() {
    let out = run(&[
        "check-cond1",
        "--example",
        "3.11",
        "--depth",
        "5",
        "--repair",
        "--grid",
        "1024",
        "--threshold",
        "1e-4",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["satisfied"], serde_json::json!(false));
    let failures = v["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    assert!(failures
        .iter()
        .all(|f| f["limit_zero"] == serde_json::json!(true)));
}

#[test]
fn unrepaired_cascade_exits_with_parse_class() {
    let out = run(&[
        "validate",
        "--example",
        "3.11",
        "--depth",
        "4",
        "--grid",
        "128",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn garbage_input_exits_2_non_normal_exits_3() {
    let dir = temp_dir("inputs");
    let garbage = dir.join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    let out = run(&["validate", "--input", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // a nilpotent (non-normal) sample
    let bad = dir.join("bad.json");
    fs::write(
        &bad,
        r#"{ "dim": 2, "grid": 1, "loop": false, "tail_bound": 0.0,
            "samples": [
              [[0,0],[1,0],[0,0],[0,0]],
              [[0,0],[1,0],[0,0],[0,0]]
            ] }"#,
    )
    .unwrap();
    let out = run(&["validate", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn aliased_crossing_exits_4() {
    let dir = temp_dir("coarse");
    // two eigenvalue ramps crossing between grid nodes of a very coarse grid
    let grid = 7usize;
    let mut samples = Vec::new();
    for g in 0..=grid {
        let x = g as f64 / grid as f64;
        let a = 0.5 + 0.4 * x;
        let b = 0.9 - 0.4 * x;
        samples.push(vec![[a, 0.0], [0.0, 0.0], [0.0, 0.0], [b, 0.0]]);
    }
    let file = dir.join("crossing.json");
    fs::write(
        &file,
        serde_json::json!({
            "dim": 2, "grid": grid, "loop": false, "tail_bound": 0.0,
            "samples": samples
        })
        .to_string(),
    )
    .unwrap();
    let out = run(&[
        "braid",
        "--input",
        file.to_str().unwrap(),
        "--threshold",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn mismatched_spectra_exit_5() {
    let dir = temp_dir("mismatch");
    let write_const = |name: &str, d0: f64, d1: f64| -> PathBuf {
        let grid = 4usize;
        let samples: Vec<_> = (0..=grid)
            .map(|_| vec![[d0, 0.0], [0.0, 0.0], [0.0, 0.0], [d1, 0.0]])
            .collect();
        let p = dir.join(name);
        fs::write(
            &p,
            serde_json::json!({
                "dim": 2, "grid": grid, "loop": true, "tail_bound": 0.0,
                "samples": samples
            })
            .to_string(),
        )
        .unwrap();
        p
    };
    let a = write_const("a.json", 1.0, 0.5);
    let b = write_const("b.json", 1.0, 0.4);
    let out = run(&[
        "equivalence",
        "--input",
        a.to_str().unwrap(),
        "--input-b",
        b.to_str().unwrap(),
        "--n",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(5));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn equivalence_on_conjugated_window_succeeds() {
    let dir = temp_dir("equiv");
    let out = run(&[
        "equivalence",
        "--example",
        "3.10",
        "--window",
        "3",
        "--grid",
        "128",
        "--n",
        "2",
        "--conjugate",
        "--seed",
        "5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["success"], serde_json::json!(true));
    assert!(report["max_residual"].as_f64().unwrap() < 18.5);
    let residuals = fs::read_to_string(dir.join("residuals.csv")).unwrap();
    assert_eq!(residuals.lines().count(), 1 + 129);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn dump_example_round_trips_through_validate() {
    let dir = temp_dir("dump");
    let out = run(&["dump-example", "--example", "3.10", "--window", "2"]);
    assert!(out.status.success());
    let file = dir.join("window.json");
    fs::write(&file, &out.stdout).unwrap();
    let out = run(&[
        "validate",
        "--input",
        file.to_str().unwrap(),
        "--grid",
        "64",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["dim"], serde_json::json!(5));
    assert_eq!(v["loop"], serde_json::json!(true));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn strong_lift_reports_small_residual() {
    let out = run(&[
        "strong",
        "--example",
        "3.10",
        "--window",
        "3",
        "--grid",
        "64",
        "--conjugate",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert!(v["max_residual"].as_f64().unwrap() < 1e-7);
}
