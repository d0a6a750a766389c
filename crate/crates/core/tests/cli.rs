mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::config_path;
use serde_json::Value;
use tridomain::config::parse_config;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tridomain")).args(args).output().unwrap()
}

fn run_with(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn json_summary(out: &Output) -> Value {
    let stdout = String::from_utf8_lossy(&out.stdout);
    let line = stdout.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON in {stdout}"));
    serde_json::from_str(line).unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

const BASE: &str = "[geometry]\nlayout = \"band\"\n[grid]\nmacro_n = 4\n[time]\ndt = 0.01\nt_end = 0.05\n";

#[test]
fn zero_macro_run_writes_zero_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with("macro", &config_path("zero.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let snapshots: Vec<_> = fs::read_dir(dir.path()).unwrap().filter_map(|e| e.ok()).filter(|e| e.path().extension().is_some_and(|x| x == "vtk")).collect();
    assert_eq!(snapshots.len(), 2);
    for s in snapshots {
        let text = fs::read_to_string(s.path()).unwrap();
        let values = text.lines().filter(|l| l.parse::<f64>().is_ok());
        assert!(values.clone().count() > 0);
        assert!(values.map(|l| l.parse::<f64>().unwrap()).all(|v| v == 0.0));
    }
    let echoed = parse_config(&dir.path().join("config.toml")).unwrap();
    assert_eq!(echoed.output.dir, dir.path().display().to_string());
    assert_eq!(echoed.time, parse_config(&config_path("zero.toml")).unwrap().time);
}

#[test]
fn bad_config_exits_with_two_and_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BASE}[micro]\neps = [0.3]\n[ionic]\neps0 = -1.0\n"));
    let out = run_with("micro", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let summary = json_summary(&out);
    assert_eq!(summary["status"], "config_error");
    let keys: Vec<String> = summary["violations"].as_array().unwrap().iter().flat_map(|v| v["keys"].as_array().unwrap().iter().map(|k| k.as_str().unwrap().to_string())).collect();
    assert!(keys.contains(&"micro.eps[0]".to_string()), "{keys:?}");
    assert!(keys.contains(&"ionic.eps0".to_string()), "{keys:?}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with("macro", &dir.path().join("absent.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_summary(&out)["status"], "config_error");
}

#[test]
fn failed_assertion_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BASE}[ionic]\nb_w = -1.0\n"));
    let out = run_with("check-ionic", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let summary = json_summary(&out);
    assert_eq!(summary["status"], "assertion_failure");
    let failed: Vec<&str> = summary["failed"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(failed.contains(&"ionic coupling"), "{failed:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL ionic coupling"));
    let written: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(written["status"], "assertion_failure");
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{BASE}[tolerances]\nsolver = 1e-300\n[initial.v1]\nkind = \"cosine\"\namplitude = 1.0\nkx = 1.0\nky = 1.0\n"),
    );
    let out = run_with("macro", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = json_summary(&out);
    assert_eq!(summary["status"], "runtime_error");
    assert!(summary["message"].as_str().unwrap().contains("step 1"));
}

#[test]
fn layouts_without_membranes_cannot_be_time_stepped() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with("macro", &config_path("laminate.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_with("cell-problems", &config_path("laminate.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = run_with("check-unfolding", &config_path("checks.toml"), out, &["--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
        let o = run_with("cell-problems", &config_path("band.toml"), out, &[]);
        assert_eq!(o.status.code(), Some(0));
    }
    for file in ["identities.csv", "tensors.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    assert_ne!(fs::read(a.join("config.toml")).unwrap(), fs::read(c.join("config.toml")).unwrap());
    let header = fs::read_to_string(a.join("tensors.csv")).unwrap();
    assert!(header.starts_with("phase,formula,m11,m12,m22,eig1,eig2\r\n"));
}

#[test]
fn every_shipped_config_parses() {
    for entry in fs::read_dir(config_path("")).unwrap() {
        let path = entry.unwrap().path();
        parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn unknown_subcommand_is_rejected() {
    let out = run(&["explode", "--config", "x.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
