//! End-to-end runs of the `siframe` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn siframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siframe"))
        .args(args)
        .env("SIFRAME_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn analyze_box_is_a_frame_and_stable() {
    let a = siframe(&["analyze", "--corpus", "box", "--stable"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = siframe(&["analyze", "--corpus", "box", "--stable"]);
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    assert_eq!(doc["frame"], true);
    assert_eq!(doc["k0"], 1);
    assert!(doc.get("generated_unix").is_none());
}

#[test]
fn analyze_diff_filtered_box_exits_false() {
    let out = siframe(&["analyze", "--corpus", "diff_filtered_box", "--stable"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out);
    assert_eq!(doc["frame"], false);
    assert_eq!(doc["constancy"], false);
}

#[test]
fn dual_refuses_without_condition_iii() {
    let out = siframe(&["dual", "--corpus", "diff_filtered_box"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("siframe:"));
}

#[test]
fn emitted_generators_round_trip_through_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = siframe(&["corpus", "emit", "hat", "--out", d, "--encoding", "binary"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let files: Vec<String> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(files.len(), 1);

    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("generators = [{:?}]\nfibers = [32, 4]\ntrials = 4\n", files[0])).unwrap();
    let from_file = siframe(&["analyze", "--config", cfg.to_str().unwrap(), "--stable"]);
    assert_eq!(from_file.status.code(), Some(0), "{}", String::from_utf8_lossy(&from_file.stderr));
    let from_corpus = siframe(&["analyze", "--corpus", "hat", "--fibers", "32x4", "--trials", "4", "--stable"]);
    assert_eq!(json(&from_file)["frame_bounds"], json(&from_corpus)["frame_bounds"]);
}

#[test]
fn dual_and_reconstruct_emit_fields() {
    let dir = tempfile::tempdir().unwrap();
    let dual_dir = dir.path().join("dual");
    let out = siframe(&["dual", "--corpus", "hat", "--emit", dual_dir.to_str().unwrap(), "--stable"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Path::new(&dual_dir.join("dual_0.field")).exists());

    let rec = dir.path().join("rec.field");
    let out = siframe(&["reconstruct", "--corpus", "hat", "--emit", rec.to_str().unwrap(), "--stable"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(rec.exists());
}

#[test]
fn csv_output_and_gramian_files() {
    let dir = tempfile::tempdir().unwrap();
    let gram = dir.path().join("g.json");
    let profile = dir.path().join("p.csv");
    let out = siframe(&[
        "analyze",
        "--corpus",
        "box",
        "--format",
        "csv",
        "--gramian",
        gram.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l == "frame,true"));
    assert!(gram.exists() && siframe::frontdesk::io::gramian_blocks_path(&gram).exists());
    assert!(std::fs::read_to_string(profile).unwrap().starts_with("node,lambda_1"));
}

#[test]
fn oracle_and_scaling_exit_codes() {
    let out = siframe(&["oracle", "delta", "--stable"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["agreement"], true);

    let out = siframe(&["diagnose-scaling", "--corpus", "diff_filtered_box", "--n-max", "6", "--stable"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let out = siframe(&["diagnose-scaling", "--corpus", "box", "--n-max", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(siframe(&["analyze", "--p", "0.5"]).status.code(), Some(1));
    assert_eq!(siframe(&["analyze", "--fibers", "64"]).status.code(), Some(1));
    assert_eq!(siframe(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(siframe(&["--help"]).status.code(), Some(0));
}
