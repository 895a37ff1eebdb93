//! End-to-end tests of the `twa` binary: argument handling, exit codes,
//! output files, and determinism across thread counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_twa")
}

/// Fresh scratch directory, unique per test, recreated on every run.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twa-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn write_cfg(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).expect("write config");
    path
}

fn run_twa(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn twa")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("manifest.json")).expect("read manifest");
    serde_json::from_str(&text).expect("parse manifest")
}

const KERR_ODE: &str = r#"{
  "hamiltonian": { "m": 2, "n": 2, "coupling": 1.0 },
  "initial_state": { "kind": "low_excited", "parameters": { "re": 0.3 } },
  "dim": 8,
  "time": { "t_max": 0.004, "samples": 3 },
  "method": "operator_ode",
  "analyses": ["spectrum", "purity"]
}"#;

#[test]
fn run_writes_csv_and_manifest() {
    let dir = scratch("run-basic");
    let cfg = write_cfg(&dir, "cfg.json", KERR_ODE);
    let out_dir = dir.join("out");
    let out = run_twa(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(out_dir.join("results.csv")).expect("results.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), twa_cli::CSV_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(row.split(',').count(), 9, "bad field count in {row}");
    }
    // spectrum+purity requested: lambda_min filled, fidelity/self-correlation empty
    let last: Vec<&str> = rows[2].split(',').collect();
    let lambda_min: f64 = last[1].parse().expect("lambda_min filled");
    assert!(lambda_min < 0.0, "Kerr low-excited state goes negative, got {lambda_min}");
    assert!(!last[5].is_empty(), "purity requested but empty");
    assert!(last[6].is_empty(), "fidelity not requested but filled");
    assert!(last[7].is_empty(), "self_correlation not requested but filled");

    let m = manifest(&out_dir);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["rows"], 3);
    assert_eq!(m["rng"], "none");
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    // resolved config echoes defaults explicitly
    assert!(m["resolved_config"]["grid"]["r_max"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_inputs_exit_2_and_missing_file_exits_4() {
    let dir = scratch("run-invalid");
    let out_arg = dir.join("out");
    let out_arg = out_arg.to_str().unwrap();

    let bad_order = KERR_ODE.replace(r#""m": 2, "n": 2"#, r#""m": 2, "n": 1"#);
    let cfg = write_cfg(&dir, "order.json", &bad_order);
    let out = run_twa(&["run", "--config", cfg.to_str().unwrap(), "--out", out_arg]);
    assert_eq!(exit_code(&out), 2, "m > n must be rejected");

    let unknown = KERR_ODE.replace(r#""dim": 8,"#, r#""dim": 8, "bogus": 1,"#);
    let cfg = write_cfg(&dir, "unknown.json", &unknown);
    let out = run_twa(&["run", "--config", cfg.to_str().unwrap(), "--out", out_arg]);
    assert_eq!(exit_code(&out), 2, "unknown fields must be rejected");

    let cfg = write_cfg(&dir, "broken.json", "{ not json");
    let out = run_twa(&["run", "--config", cfg.to_str().unwrap(), "--out", out_arg]);
    assert_eq!(exit_code(&out), 2, "unparseable JSON must be rejected");

    let missing = dir.join("does-not-exist.json");
    let out = run_twa(&["run", "--config", missing.to_str().unwrap(), "--out", out_arg]);
    assert_eq!(exit_code(&out), 4, "missing config file is an I/O error");
}

#[test]
fn divergent_flow_exits_3() {
    let dir = scratch("run-divergent");
    // second-harmonic flow with the seed on the unstable axis blows up fast
    let cfg = write_cfg(
        &dir,
        "cfg.json",
        r#"{
          "hamiltonian": { "m": 1, "n": 2, "coupling": 1.0 },
          "initial_state": { "kind": "coherent", "parameters": { "im": -2.0 } },
          "dim": 12,
          "grid": { "r_max": 6.0, "points_per_axis": 24 },
          "time": { "t_max": 0.6, "samples": 2 },
          "method": "phase_space",
          "analyses": ["spectrum"]
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run_twa(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let dir = scratch("run-threads");
    let cfg = write_cfg(
        &dir,
        "cfg.json",
        r#"{
          "hamiltonian": { "m": 2, "n": 2, "coupling": 1.0 },
          "initial_state": { "kind": "coherent", "parameters": { "re": 1.0 } },
          "dim": 10,
          "grid": { "r_max": 4.5, "points_per_axis": 48 },
          "time": { "t_max": 0.01, "samples": 3 },
          "method": "phase_space",
          "analyses": ["spectrum", "purity", "minmax"]
        }"#,
    );
    let out1 = dir.join("t1");
    let out3 = dir.join("t3");
    let r1 = run_twa(&["--threads", "1", "run", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap()]);
    assert_eq!(exit_code(&r1), 0, "stderr: {}", String::from_utf8_lossy(&r1.stderr));
    let r3 = run_twa(&["--threads", "3", "run", "--config", cfg.to_str().unwrap(), "--out", out3.to_str().unwrap()]);
    assert_eq!(exit_code(&r3), 0, "stderr: {}", String::from_utf8_lossy(&r3.stderr));
    let b1 = fs::read(out1.join("results.csv")).unwrap();
    let b3 = fs::read(out3.join("results.csv")).unwrap();
    assert_eq!(b1, b3, "results.csv must be byte-identical at any thread count");
    // --seedless is accepted (the runner never uses randomness)
    let rs = run_twa(&["--seedless", "run", "--config", cfg.to_str().unwrap(), "--out", dir.join("ts").to_str().unwrap()]);
    assert_eq!(exit_code(&rs), 0);
}

#[test]
fn unwritable_out_dir_exits_4() {
    let dir = scratch("run-badout");
    let cfg = write_cfg(&dir, "cfg.json", KERR_ODE);
    let blocker = dir.join("blocker");
    fs::write(&blocker, "occupied").unwrap();
    let out_dir = blocker.join("out"); // parent is a regular file
    let out = run_twa(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 4, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_routes_agree_for_harmonic_motion() {
    let dir = scratch("compare-harmonic");
    let cfg = write_cfg(
        &dir,
        "cfg.json",
        r#"{
          "hamiltonian": { "m": 1, "n": 1, "coupling": 1.0 },
          "initial_state": { "kind": "coherent", "parameters": { "re": 1.0 } },
          "dim": 12,
          "grid": { "r_max": 5.0, "points_per_axis": 60 },
          "time": { "t_max": 0.3, "samples": 3 },
          "method": "operator_ode",
          "analyses": ["spectrum", "purity"]
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run_twa(&["compare-routes", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    let max = m["extras"]["route_discrepancy_max"].as_f64().unwrap();
    assert!(max < 1e-3, "phase-space and operator routes disagree: {max:.3e}");
    let per_t = m["extras"]["route_discrepancies"].as_array().unwrap();
    assert_eq!(per_t.len(), 3);
    let at_t0 = per_t[0].as_array().unwrap()[1].as_f64().unwrap();
    assert!(at_t0 < 1e-6, "routes must coincide at t = 0, got {at_t0:.3e}");
}

#[test]
fn erratum_report_prints_and_writes_findings() {
    let dir = scratch("erratum");
    let report_path = dir.join("report.txt");
    let out = run_twa(&["erratum-report", "--dim", "12", "--out", report_path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for needle in ["quoted 1/8", "CONFIRMED", "Cesàro", "Kraus"] {
        assert!(stdout.contains(needle), "report missing {needle:?}");
    }
    let file = fs::read_to_string(&report_path).unwrap();
    assert!(file.contains("quoted 1/8"));
}

#[test]
fn sweep_writes_one_cell_per_combination() {
    let dir = scratch("sweep");
    let cfg = write_cfg(
        &dir,
        "sweep.json",
        r#"{
          "base": {
            "hamiltonian": { "m": 2, "n": 2, "coupling": 1.0 },
            "initial_state": { "kind": "fock", "parameters": { "n": 1 } },
            "dim": 6,
            "time": { "t_max": 0.002, "samples": 2 },
            "method": "operator_ode",
            "analyses": ["spectrum"]
          },
          "vary": { "dim": [6, 8] }
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run_twa(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for cell in ["cell_000", "cell_001"] {
        assert!(out_dir.join(cell).join("results.csv").is_file(), "{cell} missing results");
        assert!(out_dir.join(cell).join("manifest.json").is_file(), "{cell} missing manifest");
    }
    let text = fs::read_to_string(out_dir.join("sweep_manifest.json")).unwrap();
    let sm: serde_json::Value = serde_json::from_str(&text).unwrap();
    let cells = sm.as_array().expect("sweep manifest is a list");
    assert_eq!(cells.len(), 2);
    assert_ne!(
        cells[0]["config_hash"], cells[1]["config_hash"],
        "different dims must hash differently"
    );
}

#[test]
fn oracle_check_records_block_discrepancy() {
    let dir = scratch("oracle");
    let cfg = write_cfg(
        &dir,
        "cfg.json",
        r#"{
          "hamiltonian": { "m": 2, "n": 2, "coupling": 1.0 },
          "initial_state": { "kind": "fock", "parameters": { "n": 0 } },
          "dim": 10,
          "grid": { "r_max": 4.5, "points_per_axis": 60 },
          "time": { "t_max": 0.0, "samples": 1 },
          "method": "oracle_check"
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run_twa(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    let oracle = &m["extras"]["oracle"];
    assert_eq!(oracle["probe_dim"], 7);
    let disc = oracle["discrepancy_norm"].as_f64().unwrap();
    let norm = oracle["oracle_norm"].as_f64().unwrap();
    assert!(disc < 0.05, "oracle vs assembled generator disagree: {disc:.3e}");
    assert!(norm > 1.0, "oracle norm implausibly small: {norm:.3e}");
    assert_eq!(m["rows"], 0, "oracle check produces no time series");
}
