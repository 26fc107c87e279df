use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cowlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cowlab")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

/// First row of the three-state config as a standalone file.
fn single_row(dir: &Path) -> String {
    let rows: Value = serde_json::from_str(&fs::read_to_string(configs().join("three_state.json")).unwrap()).unwrap();
    let path = dir.join("one.json");
    fs::write(&path, rows[0].to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|x| x.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn reproduce_table3_matches_references_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t3.csv");
    let o = cowlab(&["reproduce", "table3", "--config", &config("three_state.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(!r[4].is_empty(), "row {} lacks a reference", r[0]);
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t3.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "reproduce table3");
    assert_eq!(m["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(m["rows"].as_array().unwrap().len(), 4);
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reproduce_table5_needs_four_state_config() {
    let o = cowlab(&["reproduce", "table5", "--config", &config("three_state.json")]);
    assert_eq!(o.status.code(), Some(2));
    let o = cowlab(&["reproduce", "table5", "--config", &config("four_state.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&stdout(&o)).len(), 2);
}

#[test]
fn unknown_setup_has_no_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut row: Value = serde_json::from_str(&fs::read_to_string(single_row(dir.path())).unwrap()).unwrap();
    row["eta_det"] = Value::from(0.5);
    let p = dir.path().join("other.json");
    fs::write(&p, row.to_string()).unwrap();
    let o = cowlab(&["reproduce", "table3", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert!(rows.iter().all(|r| r[4].is_empty()));
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"mu\": 0.1,").unwrap();
    let o = cowlab(&["reproduce", "table3", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());

    fs::write(&bad, r#"{"mu": -1, "f": 0.155, "t_B": 0.9, "eta_det": 0.2, "alpha_channel_db_per_km": 0.2, "m_max": 10}"#).unwrap();
    let o = cowlab(&["reproduce", "table3", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = cowlab(&["reproduce", "table3", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_grids_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let one = single_row(dir.path());
    for g in ["-6:-2:0", "-2:-6:5", "a:b:3", "-6:-2", "-6:-2:1"] {
        let o = cowlab(&["sweep", "fig6", "--config", &one, "--grid", g]);
        assert_eq!(o.status.code(), Some(2), "grid {g}");
    }
    // Sweeps take one parameter set.
    let o = cowlab(&["sweep", "fig6", "--config", &config("three_state.json"), "--grid", "-6:-3:4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let one = single_row(dir.path());
    let args = ["sweep", "fig6", "--config", &one, "--grid", "-5:-3:9"];
    let a = cowlab(&args);
    let b = cowlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let args = ["reproduce", "table3", "--config", &config("three_state.json")];
    assert_eq!(cowlab(&args).stdout, cowlab(&args).stdout);
}

#[test]
fn coincidence_sweep_changes_sign_once() {
    let dir = tempfile::tempdir().unwrap();
    let one = single_row(dir.path());
    let o = cowlab(&["sweep", "fig6", "--config", &one, "--grid", "-6:-2.5:36"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 36);
    let signs: Vec<bool> = rows
        .iter()
        .filter_map(|r| {
            let a: f64 = r[1].parse().unwrap();
            let h: f64 = r[2].parse().unwrap();
            (a.is_finite() && h.is_finite()).then_some(a < h)
        })
        .collect();
    assert!(signs.len() > 10);
    let flips = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1, "{signs:?}");
    assert!(signs[0], "attack must stay below the honest rate at low gain");
}

#[test]
fn rate_sweep_reports_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let one = single_row(dir.path());
    let out = dir.path().join("f9.csv");
    let o = cowlab(&["sweep", "fig9", "--config", &one, "--grid", "-7:-3:9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&fs::read_to_string(&out).unwrap()).len(), 9);
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("f9.csv.manifest.json")).unwrap()).unwrap();
    assert!(m["metadata"]["exponent"].as_f64().unwrap().is_finite());
    assert_eq!(m["command"], "sweep fig9");
}

#[test]
fn usd_prints_solution_json() {
    let o = cowlab(&["usd", "--mu", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let expected = 1.0 - (-0.5f64).exp();
    assert!((v["q_s"].as_f64().unwrap() - expected).abs() < 1e-12);

    let o = cowlab(&["usd", "--mu", "0.5", "--four-state", "--fd", "0.1", "--fv", "0.055"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = v["p_given_c"].as_array().unwrap();
    let total: f64 = p.iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    assert_eq!(cowlab(&["usd", "--mu", "-1"]).status.code(), Some(2));
    assert_eq!(cowlab(&["usd", "--mu", "0.5", "--four-state"]).status.code(), Some(2));
}

#[test]
fn oracle_check_is_deterministic_and_passes() {
    let a = cowlab(&["oracle-check", "--seed", "7", "--cases", "40"]);
    let b = cowlab(&["oracle-check", "--seed", "7", "--cases", "40"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",ok")));
}

#[test]
fn oracle_check_rejects_zero_cases() {
    assert_eq!(cowlab(&["oracle-check", "--seed", "7", "--cases", "0"]).status.code(), Some(2));
}

#[test]
fn oracle_check_catches_injected_fault() {
    for family in ["fock-individual", "fock-double", "four-state-recursion", "decoy-recursion", "three-state-limit"] {
        let o = cowlab(&["oracle-check", "--seed", "3", "--cases", "5", "--inject-fault", family]);
        assert_eq!(o.status.code(), Some(1), "{family}");
        let err = String::from_utf8_lossy(&o.stderr);
        let offending: Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
        assert_eq!(offending["family"], family.replace('-', "_"));
        assert_eq!(stdout(&o).lines().filter(|l| l.ends_with(",FAIL")).count(), 1);
    }
}
