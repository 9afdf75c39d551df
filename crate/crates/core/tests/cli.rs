use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn hsharp(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hsharp")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn without_runtime(text: &str) -> Vec<Value> {
    text.lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            if let Some(o) = v.as_object_mut() {
                o.remove("runtime_ms");
            }
            v
        })
        .collect()
}

#[test]
fn constant_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let (code, _, _) = hsharp(&["--command", "constant", "--q", "2", "--lambda", "-0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let recs = records(&out);
    assert_eq!(recs[0]["record"], "header");
    assert_eq!(recs[0]["mc"]["samples"], 20_000);
    assert_eq!(recs[0]["quad"]["panels"], 4);
    assert_eq!(recs[1]["record"], "report");
    assert_eq!(recs[1]["passed"], true);
    let w = 2.0 * std::f64::consts::PI.powi(2);
    assert!((recs[1]["closed_form"].as_f64().unwrap() - w).abs() < 1e-10 * w);
}

#[test]
fn usage_errors_exit_two() {
    let (code, _, err) = hsharp(&["--command", "constant", "--lambda", "0"]);
    assert_eq!(code, 2);
    assert!(err.contains("λ must be negative"), "{err}");
    let (code, _, _) = hsharp(&["--command", "nope"]);
    assert_eq!(code, 2);
    let (code, _, err) = hsharp(&["--command", "verify-sharpness", "--qj", "2", "--lambda", "-0.6", "--format", "csv"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = hsharp(&["--command", "constant", "--out", "/nonexistent-dir/x.jsonl"]);
    assert_eq!(code, 2);
}

#[test]
fn empty_width_list_gives_empty_table() {
    let (code, out, _) = hsharp(&["--command", "verify-sharpness", "--format", "csv", "--widths", ""]);
    assert_eq!(code, 0);
    assert_eq!(out, "r_min,r_max,ratio,constant,ratio_over_constant\n");
}

#[test]
fn failing_verification_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    // a narrow window is far from the extremal ratio
    let (code, _, _) =
        hsharp(&["--command", "verify-sharpness", "--widths", "0.5:2", "--samples", "2000", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[1]["passed"], false);
}

#[test]
fn runs_are_reproducible() {
    let args = ["--command", "group-check", "--n", "2", "--seed", "11", "--samples", "5000"];
    let (c1, a, _) = hsharp(&args);
    let (c2, b, _) = hsharp(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(without_runtime(&a), without_runtime(&b));
    let (_, c, _) = hsharp(&["--command", "group-check", "--n", "2", "--seed", "12", "--samples", "5000"]);
    assert_ne!(without_runtime(&a), without_runtime(&c));
}

#[test]
fn thread_cap_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_hsharp"))
        .args(["--command", "oracle-compare", "--qj", "4,4"])
        .env("HLP_SHARP_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_hsharp"))
        .args(["--command", "constant"])
        .env("HLP_SHARP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn params_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = hsharp::ParamSet::sharp(1, vec![3.0, 6.0], -0.3, vec![0.2, -0.1], 0.5);
    let path = dir.path().join("p.json");
    std::fs::write(&path, serde_json::to_string(&p).unwrap()).unwrap();
    let (code, out, err) = hsharp(&["--command", "oracle-compare", "--params", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let header: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    let back: hsharp::ParamSet = serde_json::from_value(header["params"].clone()).unwrap();
    assert_eq!(back, p);
}
