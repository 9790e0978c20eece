mod common;

use std::process::{Command, Output};

use serde_json::Value;

fn flatdec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatdec")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    common::fixture_path(name).to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_report(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_reports_vertical_annihilator_and_derived_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("analyze.json");
    let out = flatdec(&["analyze", &fixture("sin"), "--report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_report(&path);
    assert_eq!(report["schema"], "flatdec/1");
    let analysis = &report["analysis"];
    assert_eq!(analysis["vertical_annihilator"], serde_json::json!(["d_u1", "d_u2"]));
    assert_eq!(analysis["derived_flag_dimensions"][1], 1);
    assert_eq!(analysis["static_feedback_linearizable_shortcut"], false);
    assert_eq!(report["input"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn analyze_flags_the_shortcut_on_chains() {
    let out = flatdec(&["analyze", &fixture("chain3")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("static-feedback-linearizable shortcut applicable"));
}

#[test]
fn empty_file_is_a_syntax_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.fds");
    std::fs::write(&path, "").unwrap();
    let out = flatdec(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("syntax error"));
}

#[test]
fn decompose_prints_flat_outputs() {
    let out = flatdec(&["decompose", &fixture("sin")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("flat outputs (1-flat): x3, x2 - x1*u2/u1"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coupled.json");
    let out = flatdec(&["decompose", &fixture("coupled"), "--report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_report(&path);
    let mut outputs: Vec<&str> = report["flat_outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    outputs.sort();
    assert_eq!(outputs, ["x1 - u2*x2", "x4"]);
    let log = report["decomposition"]["branch_log"].as_array().unwrap();
    assert_eq!(log.iter().filter(|b| b["outcome"]["kind"] == "dead_end").count(), 1);
}

#[test]
fn exhausted_budget_is_inconclusive() {
    let out = flatdec(&["decompose", &fixture("sin"), "--max-depth", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("inconclusive"));
}

#[test]
fn verify_with_certificate_and_claimed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("sin.json");
    let out = flatdec(&["decompose", &fixture("sin"), "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = report.to_str().unwrap();

    let out = flatdec(&["verify", &fixture("sin"), "--certificate", report]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let out = flatdec(&["verify", &fixture("sin"), "--certificate", report, "--outputs", "x3,x2"]);
    assert_eq!(out.status.code(), Some(4));

    let out = flatdec(&["verify", &fixture("sin"), "--outputs", "x2 - x1*u2/u1, x3", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_rejects_missing_or_foreign_certificates() {
    let out = flatdec(&["verify", &fixture("sin"), "--certificate", "/nonexistent/cert.json"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("chain.json");
    flatdec(&["decompose", &fixture("chain3"), "--report", report.to_str().unwrap()]);
    let out = flatdec(&["verify", &fixture("sin"), "--certificate", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = flatdec(&["verify", &fixture("sin"), "--outputs", "x3,("]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_invocations_write_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.json"), dir.path().join("b.json")];
    for p in &paths {
        let out = flatdec(&["decompose", &fixture("coupled"), "--verify", "--seed", "3", "--report", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert!(read_report(&paths[0]).get("timings_ms").is_none());
}
