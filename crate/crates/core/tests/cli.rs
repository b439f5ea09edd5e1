use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qubit_thermo::experiment::{ExperimentConfig, TRAJECTORY_COLUMNS};

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qubit-thermo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn fig1_writes_trajectory_schema_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&["fig1", "--n-traj", "4", "--seed", "7"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut rdr = csv::Reader::from_path(tmp.path().join("fig1_trajectory.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, TRAJECTORY_COLUMNS);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3001);

    // dU column sums to W_cum + Q_cum at the end
    let col = |r: &csv::StringRecord, name: &str| -> f64 {
        let i = TRAJECTORY_COLUMNS.iter().position(|c| *c == name).unwrap();
        r[i].parse().unwrap()
    };
    let du: f64 = rows.iter().map(|r| col(r, "dU")).sum();
    let last = rows.last().unwrap();
    assert!((du - col(last, "W_cum") - col(last, "Q_cum")).abs() < 1e-12);
    for r in &rows {
        assert!((col(r, "dU") - col(r, "dW") - col(r, "dQ")).abs() < 1e-12);
    }

    let cfg = ExperimentConfig::from_toml_str(&fs::read_to_string(tmp.path().join("resolved_config.toml")).unwrap())
        .unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.n_traj, 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("fig1_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 7);
}

#[test]
fn resolved_config_reruns_bit_identically() {
    let first = tempfile::tempdir().unwrap();
    let out = cli(&["fig2", "--n-traj", "8", "--seed", "31", "--feedback", "--f", "2.5"], first.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let second = tempfile::tempdir().unwrap();
    let config = first.path().join("resolved_config.toml");
    let out = cli(&["run", "--config", config.to_str().unwrap(), "--workers", "3"], second.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(read_all(first.path()), read_all(second.path()));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first.path().join("transitions.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["f"], 2.5);
    assert_eq!(report["feedback"], true);
    for key in ["p_tau", "dp_w", "dp_q", "p0"] {
        assert!(report[key].is_array(), "{key}");
    }
}

#[test]
fn unknown_config_key_fails_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "preset = \"fig2\"\n[detector]\ns0 = 2500.0\nnoise_floor = 1\n").unwrap();
    let out = cli(&["run", "--config", config.to_str().unwrap()], &tmp.path().join("out"));
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("detector.noise_floor"), "{err}");
}

#[test]
fn invalid_override_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&["fig2", "--f", "-1"], tmp.path());
    assert!(!out.status.success());
    let out = cli(&["fig2", "--scheme", "milstein"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qubit-thermo"))
        .args(["jarzynski", "--n-traj", "6"])
        .env("QUBIT_THERMO_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("jarzynski.json")).unwrap()).unwrap();
    assert_eq!(report["paper_reference"], -0.495);
    assert!((report["delta_f_exact"].as_f64().unwrap() + 0.5203).abs() < 1e-4);
    assert!(report["delta_f_est"].is_f64());
}

#[test]
fn fig3_compares_feedback_against_unitary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&["fig3a", "--n-traj", "6"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("fig3a.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["tau_steps"], 1400);
    assert_eq!(report["config"]["f"], 3.0);
    let rows = csv::Reader::from_path(tmp.path().join("fig3a_transitions.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(rows, 12);
}
