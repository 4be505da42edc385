use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BSC: &str = "[channel]\nbob_crossover = 0.05\nwillie_crossover = 0.1\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covertslot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn covertslot")
}

fn manifest(dir: &TempDir, body: &str) -> String {
    let p = dir.path().join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// CSV records without the named column.
fn records_without(path: &Path, drop: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let k = r.headers().unwrap().iter().position(|h| h == drop);
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            rec.iter().enumerate().filter(|(i, _)| Some(*i) != k).map(|(_, s)| s.to_string()).collect()
        })
        .collect()
}

#[test]
fn awgn_capacity_report() {
    let dir = TempDir::new().unwrap();
    let cfg = manifest(&dir, "n_list = [1000]\ndelta = 0.5\ntrials = 1\n[channel]\nsigma_b2 = 1.0\nsigma_w2 = 4.0\n");
    let out = run(dir.path(), &["bounds", "--config", &cfg, "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let lower = v["capacity"]["lower"].as_f64().unwrap();
    let upper = v["capacity"]["upper"].as_f64().unwrap();
    assert!((lower - 2.82843).abs() < 1e-5);
    assert_eq!(upper, 4.0);
    assert_eq!(json(&dir.path().join("o/bounds.json")), v);
}

#[test]
fn infeasible_rows_are_flagged_not_fatal() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["bounds", "--n", "10,100000", "--L", "4", "--out", "o"]);
    assert!(out.status.success());
    let v = json(&dir.path().join("o/bounds.json"));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["status"], "infeasible");
    assert!(rows[0]["reason"].as_str().unwrap().contains("infeasible"));
    assert_eq!(rows[1]["status"], "ok");
}

#[test]
fn bad_parameters_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["simulate", "--n", "1000", "--L", "4", "--trials", "0", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let cfg = manifest(&dir, &format!("n_list = []\ndelta = 0.5\ntrials = 1\n{BSC}"));
    let out = run(dir.path(), &["bounds", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_list is empty"));

    let cfg = manifest(&dir, &format!("n_list = [100]\ndelta = 0.5\ntrials = 1\nbogus = 1\n{BSC}"));
    let out = run(dir.path(), &["bounds", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn mid_run_failure_leaves_a_status_row() {
    let dir = TempDir::new().unwrap();
    // the second block length has a single slot, which the converse rejects
    let cfg = manifest(
        &dir,
        &format!("n_list = [200, 1]\nslot_rule = {{ polynomial = 0.5 }}\ndelta = 0.5\ntrials = 300\n{BSC}"),
    );
    let out = run(dir.path(), &["detect", "--config", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let rows = records_without(&dir.path().join("o/detect.csv"), "");
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "above");
    assert_eq!(rows[2][0], "status");
    assert!(rows[2][1].contains("n = 1"));
    assert!(json(&dir.path().join("o/detect.json"))["error"].is_string());
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let args = |o: &'static str| ["sweep", "--n", "400,1600", "--L", "20", "--trials", "300", "--seed", "5", "--out", o];
    for o in ["a", "b"] {
        assert!(run(dir.path(), &args(o)).status.success());
    }
    let a = records_without(&dir.path().join("a/sweep.csv"), "runtime_s");
    assert_eq!(a, records_without(&dir.path().join("b/sweep.csv"), "runtime_s"));
    assert_eq!(a.len(), 2);
    assert_eq!(
        std::fs::read(dir.path().join("a/sweep.svg")).unwrap(),
        std::fs::read(dir.path().join("b/sweep.svg")).unwrap()
    );
    // a different seed moves the simulated columns
    assert!(run(dir.path(), &["sweep", "--n", "400,1600", "--L", "20", "--trials", "300", "--seed", "6", "--out", "c"])
        .status
        .success());
    assert_ne!(a, records_without(&dir.path().join("c/sweep.csv"), "runtime_s"));
}

#[test]
fn oracle_negative_control_fails() {
    let dir = TempDir::new().unwrap();
    let ok = run(dir.path(), &["oracle-check", "--out", "o"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(dir.path(), &["oracle-check", "--bound-scale", "0.5", "--out", "o"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAILED"));
    assert_eq!(json(&dir.path().join("o/oracle_check.json"))["passed"], false);
}
