use std::process::Command;

use srdae_cli::commands::{self, Artifacts};
use srdae_cli::parse_config;

const SMALL: &str = r#"
seed = 3
[model]
phi = "stable(1)"
pi = "riesz(1/3)"
d = 1
p = 16
q = 16
gamma = 1/4
r = 4/3
lambda_sm = 1/8
initial = "bump(1, 2)"
[grid]
n = 64
l = 16
[run]
t = 1/4
dt = 1/512
paths = 3
snapshot_every = 32
probes = 4
"#;

fn srdae(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_srdae")).args(args).output().unwrap()
}

#[test]
fn analyze_reports_window_and_exponents() {
    let config = parse_config(SMALL).unwrap();
    let a = commands::analyze(&config).unwrap();
    assert!(a.feasibility.overall);
    let text = a.text();
    assert!(text.contains("holder window: (1/16, 3/32)"), "{text}");
    assert!(text.contains("default exponents: alpha=5/64 beta=11/128"));
    let lines = a.json_lines();
    assert_eq!(lines.last().unwrap()["default_alpha"], "5/64");
    assert!(lines.iter().filter(|l| l["record"] == "condition").count() >= 6);
}

#[test]
fn reproduce_filters_cases_and_emits_jsonl() {
    let all = commands::reproduce(&[]).unwrap();
    assert!(all.all_pass());
    let one = commands::reproduce(&["white-noise".to_string()]).unwrap();
    assert!(!one.checks.is_empty() && one.checks.len() < all.checks.len());
    assert!(one.checks.iter().all(|c| c.case == "white-noise"));
    for line in one.jsonl().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["case"], "white-noise");
        assert_eq!(v["pass"], true);
    }
    assert!(commands::reproduce(&["no-such-case".to_string()]).is_err());
}

#[test]
fn records_round_trip_through_disk() {
    let config = parse_config(SMALL).unwrap();
    let records = commands::simulate(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let artifacts = Artifacts::new(dir.path(), &config).unwrap();
    let path = commands::write_records(&artifacts, &config, &records).unwrap();
    let (back, reread) = commands::read_records(&path).unwrap();
    assert_eq!(back, config);
    assert_eq!(reread, records);
    let echoed = std::fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert_eq!(parse_config(&echoed).unwrap(), config);

    let summary = artifacts
        .csv("summary.csv", commands::SUMMARY_HEADER, &commands::summary_rows(&records))
        .unwrap();
    let body = std::fs::read_to_string(summary).unwrap();
    assert!(body.starts_with(&format!("# config_hash={}\n# seed=3\n", config.hash())));
    assert_eq!(body.lines().count(), 2 + 1 + records.len());
}

#[test]
fn tampered_header_is_rejected() {
    let config = parse_config(SMALL).unwrap();
    let records = commands::simulate(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = commands::write_records(&Artifacts::new(dir.path(), &config).unwrap(), &config, &records).unwrap();
    let body = std::fs::read_to_string(&path).unwrap().replacen("seed = 3", "seed = 4", 1);
    std::fs::write(&path, body).unwrap();
    assert!(commands::read_records(&path).is_err());
}

#[test]
fn binary_exit_codes() {
    let ok = srdae(&["reproduce", "--case", "fixed-noise"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("checks passed"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, SMALL.replace("stable(1)", "stable(1.5)")).unwrap();
    let out = srdae(&["analyze", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config 4:7"));

    let good = dir.path().join("good.cfg");
    std::fs::write(&good, SMALL).unwrap();
    let run_dir = dir.path().join("run");
    let sim = srdae(&["simulate", "--config", good.to_str().unwrap(), "--out", run_dir.to_str().unwrap()]);
    assert_eq!(sim.status.code(), Some(0), "{}", String::from_utf8_lossy(&sim.stderr));
    for name in ["config.txt", "records.jsonl", "summary.csv"] {
        assert!(run_dir.join(name).exists(), "{name}");
    }
}
