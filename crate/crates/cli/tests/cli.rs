use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn lpreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpreg")).current_dir(dir).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn without_timings(mut v: Value) -> Value {
    v["manifest"].as_object_mut().unwrap().remove("timings_ms");
    v
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    let mut ones = String::from("4 4\n");
    for i in 1..=4 {
        for j in 1..=4 {
            ones.push_str(&format!("{i} {j}\n"));
        }
    }
    fs::write(dir.path().join("ones.txt"), ones).unwrap();
    fs::write(dir.path().join("i2.txt"), "2 2\n1 1\n2 2\n").unwrap();
    fs::write(dir.path().join("and.csp"), "2 2\nvars 1 2\ntable 0 0 0 1\n").unwrap();
    dir
}

#[test]
fn decompose_all_ones() {
    let dir = setup();
    let out = lpreg(dir.path(), &["decompose", "ones.txt", "--eps", "0.4", "--C", "1", "--p", "2", "--oracle", "exact", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["partition"].as_array().unwrap().len(), 1);
    assert_eq!(v["certificate"]["status"], "verified");
    assert_eq!(v["certificate"]["residual_cut_norm"], 0.0);
    assert_eq!(v["cut_matrices"][0]["rows"], serde_json::json!([1, 2, 3, 4]));
    assert_eq!(v["manifest"]["invocation"]["command"], "decompose");
}

#[test]
fn missing_file_is_an_input_error() {
    let dir = setup();
    let out = lpreg(dir.path(), &["decompose", "missing.txt", "--eps", "0.4", "--C", "1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_file_reports_the_line() {
    let dir = setup();
    fs::write(dir.path().join("bad.txt"), "3 3\n1 1\n# fine\n4 1\n").unwrap();
    let out = lpreg(dir.path(), &["cutnorm", "bad.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = setup();
    assert_eq!(lpreg(dir.path(), &["decompose", "ones.txt", "--eps", "0.4"]).status.code(), Some(1));
    assert_eq!(lpreg(dir.path(), &["decompose", "ones.txt", "--eps", "0.7", "--C", "1", "--p", "2"]).status.code(), Some(1));
    assert_eq!(lpreg(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn tampered_record_fails_verification() {
    let dir = setup();
    let args = ["decompose", "ones.txt", "--eps", "0.4", "--C", "1", "--p", "2", "--out", "r.json"];
    assert_eq!(lpreg(dir.path(), &args).status.code(), Some(0));
    let ok = lpreg(dir.path(), &["decompose", "ones.txt", "--eps", "0.4", "--C", "1", "--p", "2", "--check", "r.json"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["certificate"]["status"], "verified");

    let mut record: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    record["cut_matrices"][0]["c"] = Value::from(0.5);
    fs::write(dir.path().join("t.json"), record.to_string()).unwrap();
    let bad = lpreg(dir.path(), &["decompose", "ones.txt", "--eps", "0.4", "--C", "1", "--p", "2", "--check", "t.json"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(json(&bad)["certificate"]["status"], "failed");
}

#[test]
fn cutnorm_of_identity_residual() {
    let dir = setup();
    let out = lpreg(dir.path(), &["cutnorm", "i2.txt", "--residual"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["value"], 0.5);
    let plain = lpreg(dir.path(), &["cutnorm", "i2.txt"]);
    assert_eq!(json(&plain)["value"], 2.0);
}

#[test]
fn gen_is_deterministic() {
    let dir = setup();
    for name in ["a.txt", "b.txt"] {
        let out = lpreg(dir.path(), &["gen", "--n", "8", "--density", "0.25", "--seed", "7", "--out", name]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a.txt")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.txt")).unwrap());
    let stdout = lpreg(dir.path(), &["gen", "--n", "8", "--density", "0.25", "--seed", "7"]);
    assert_eq!(stdout.stdout, a);
}

#[test]
fn maxcsp_single_and() {
    let dir = setup();
    let out = lpreg(dir.path(), &["maxcsp", "and.csp", "--eps", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["ratio"], 1.0);
    assert_eq!(v["sigma"], serde_json::json!([1, 1]));
    assert_eq!(v["value"], 1);
    assert_eq!(v["opt"], 1);
}

#[test]
fn tensor_all_ones() {
    let dir = setup();
    let mut text = String::from("2 2 2\n");
    for i in 1..=2 {
        for j in 1..=2 {
            for k in 1..=2 {
                text.push_str(&format!("{i} {j} {k}\n"));
            }
        }
    }
    fs::write(dir.path().join("t.txt"), text).unwrap();
    let out = lpreg(dir.path(), &["tensor", "t.txt", "--eps", "0.45"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["cut_tensors"], serde_json::json!([{ "sides": [[1, 2], [1, 2], [1, 2]], "c": 1.0 }]));
    assert_eq!(v["report"]["status"], "verified");
}

#[test]
fn check_flags_unbounded_matrices() {
    let dir = setup();
    // one dense corner in an otherwise sparse 6x6
    fs::write(dir.path().join("corner.txt"), "6 6\n1 1\n1 2\n2 1\n2 2\n").unwrap();
    let out = lpreg(dir.path(), &["check", "corner.txt", "--C", "1", "--eta", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["boundedness"]["verdict"], "violated");
    let ok = lpreg(dir.path(), &["check", "ones.txt", "--C", "1", "--eta", "0.25"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn replay_reproduces_output() {
    let dir = setup();
    let first = lpreg(dir.path(), &["decompose", "ones.txt", "--eps", "0.3", "--C", "1", "--p", "inf", "--oracle", "heuristic", "--seed", "5", "--verify"]);
    assert_eq!(first.status.code(), Some(0));
    fs::write(dir.path().join("run.json"), &first.stdout).unwrap();
    let again = lpreg(dir.path(), &["replay", "run.json"]);
    assert_eq!(without_timings(json(&first)), without_timings(json(&again)));
}

#[test]
fn text_format_is_not_json() {
    let dir = setup();
    let out = lpreg(dir.path(), &["cutnorm", "i2.txt", "--residual", "--format", "text"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "cut norm: 0.5\n");
}
