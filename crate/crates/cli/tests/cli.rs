//! End-to-end runs of the binary on the shipped scenes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contact-forge")).args(args).output().unwrap()
}

fn run_scene(cmd: &str, name: &str, extra: &[&str]) -> (Output, Value) {
    let report = scratch(&format!("{cmd}-{name}.json"));
    let s = scene(name);
    let mut args = vec![cmd, "--scene", s.to_str().unwrap(), "--report", report.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    let text = std::fs::read_to_string(&report).unwrap_or_else(|_| panic!("no report: {}", String::from_utf8_lossy(&out.stderr)));
    (out, serde_json::from_str(&text).unwrap())
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn standard_form_passes_check() {
    let (out, rep) = run_scene("check", "standard.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(rep["all_pass"], true);
    assert_eq!(rep["data"]["reeb_is_dz"], true);
}

#[test]
fn normal_form_passes_check() {
    let (out, rep) = run_scene("check", "normal.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rep["all_pass"], true);
}

#[test]
fn length_profile_has_one_row_per_ray() {
    let csv = scratch("profile.csv");
    let (out, _) = run_scene("check", "normal.json", &["--csv", csv.to_str().unwrap(), "--plot", "length-profile"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 33);
    assert!(text.contains("\r\n"));
}

#[test]
fn zero_remainder_moser_is_the_identity() {
    let (out, rep) = run_scene("moser", "moser_zero.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = &rep["checks"][0];
    assert_eq!(c["residual"].as_f64(), Some(0.0));
}

#[test]
fn residual_decay_sweeps_four_step_counts() {
    let csv = scratch("decay.csv");
    let (out, _) = run_scene("moser", "moser_zero.json", &["--csv", csv.to_str().unwrap(), "--plot", "residual-decay"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 5);
}

#[test]
fn legendrianize_writes_records() {
    let records = scratch("records.json");
    let (out, rep) = run_scene("legendrianize", "legendrian.json", &["--out", records.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(check(&rep, "legendrianize:cubic")["residual"].as_f64().unwrap() < 1e-12);
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(records).unwrap()).unwrap();
    assert!(rec["cubic"]["z"].is_object());
}

#[test]
fn nonzero_period_fails_with_witness() {
    let (out, rep) = run_scene("legendrianize", "obstructed.json", &[]);
    assert_eq!(out.status.code(), Some(1));
    let c = check(&rep, "legendrianize:winding");
    assert_eq!(c["status"], "fail");
    assert!(c["witnesses"]["period_obstruction"].is_array());
}

#[test]
fn frame_completions_certify() {
    let (out, rep) = run_scene("normalize", "frame.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    check(&rep, "frame:unimodular_row");
    check(&rep, "frame:laurent_pair");
}

#[test]
fn symplectic_scene_classifies() {
    let (out, rep) = run_scene("symplectic", "symplectic.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rep["all_pass"], true);
}

#[test]
fn tightened_tolerance_fails_and_bad_input_is_rejected() {
    let (out, _) = run_scene("legendrianize", "legendrian.json", &["--tol", "legendrian=1e-20"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["check", "--scene", scene("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["check", "--scene", scene("standard.json").to_str().unwrap(), "--tol", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let (_, a) = run_scene("spray", "spray.json", &[]);
    let (_, b) = run_scene("spray", "spray.json", &[]);
    assert_eq!(a["all_pass"], true);
    assert_eq!(a, b);
    assert_eq!(a["scene_sha256"].as_str().unwrap().len(), 64);
}
