//! End-to-end tests of the `zeno` binary: every subcommand, the documented
//! exit codes, JSON round-trips, and determinism of the emitted artifacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use zeno_cli::reports::{EstimateReport, ModelInfoReport};

fn zeno(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zeno"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn zeno")
}

fn write_model(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.display().to_string()
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn model_info_examples() {
    let dir = tempfile::tempdir().unwrap();

    let two = write_model(
        dir.path(),
        "two.json",
        r#"{"type": "two_level", "omega": 2.0, "delta": 7.0}"#,
    );
    let out = zeno(&["model-info", "--model", &two], &[]);
    assert!(out.status.success());
    let report: ModelInfoReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report.delta_h_ee, 2.0);
    assert_eq!(report.omega_bar, 7.0);

    let diag = write_model(
        dir.path(),
        "diag.json",
        r#"{"type": "generic", "matrix": [[[1,0],[0,0],[0,0]],[[0,0],[2,0],[0,0]],[[0,0],[0,0],[3,0]]], "initial_index": 0}"#,
    );
    let out = zeno(&["model-info", "--model", &diag], &[]);
    let report: ModelInfoReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report.delta_h_ee, 0.0);
    assert_eq!(report.h_ee_shift, 1.0);

    let cont = write_model(
        dir.path(),
        "cont.json",
        r#"{"type": "continuum", "omegas": [1.0, 2.0, 3.0], "couplings": [[1,0],[1,0],[1,0]]}"#,
    );
    let out = zeno(&["model-info", "--model", &cont], &[]);
    let report: ModelInfoReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!((report.delta_h_ee - 3f64.sqrt()).abs() <= 1e-15);

    // Emitted JSON parses back to identical values.
    let text = stdout_str(&out);
    let reparsed: ModelInfoReport = serde_json::from_str(&text).unwrap();
    assert_eq!(
        serde_json::to_string(&reparsed).unwrap(),
        serde_json::to_string(&report).unwrap()
    );
}

#[test]
fn estimate_two_level_and_continuum() {
    let dir = tempfile::tempdir().unwrap();
    let two = write_model(
        dir.path(),
        "two.json",
        r#"{"type": "two_level", "omega": 1.0, "delta": 1.0}"#,
    );
    let out = zeno(
        &[
            "estimate", "--model", &two, "--tau", "1e-2", "--nu", "1.5707963267948966",
            "--budget", "400", "--seed", "3",
        ],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: EstimateReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!((report.delta_h_hat - 1.0).abs() <= 0.1, "{}", report.delta_h_hat);
    assert_eq!(report.derived.as_ref().unwrap().kind, "rabi_omega");
    assert!(report.converged);

    let cont = write_model(
        dir.path(),
        "cont.json",
        r#"{"type": "continuum", "omegas": [0.5, 2.0], "couplings": [[3.0, 0.0], [0.0, 4.0]]}"#,
    );
    let out = zeno(
        &[
            "estimate", "--model", &cont, "--tau", "1e-3", "--nu", "2.8415926535897933",
            "--budget", "400", "--seed", "5",
        ],
        &[],
    );
    assert!(out.status.success());
    let report: EstimateReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(
        report.ci95_delta_h[0] <= 5.0 && 5.0 <= report.ci95_delta_h[1],
        "interval {:?}",
        report.ci95_delta_h
    );
    assert!((report.delta_h_hat - 5.0).abs() <= 0.5);
    assert_eq!(report.derived.as_ref().unwrap().kind, "continuum_rms");
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_model(
        dir.path(),
        "empty.json",
        r#"{"type": "continuum", "omegas": [], "couplings": []}"#,
    );
    let out = zeno(
        &["estimate", "--model", &empty, "--tau", "1e-2", "--nu", "1.5"],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));

    let garbled = write_model(dir.path(), "bad.json", r#"{"type": "two_level""#);
    let out = zeno(&["model-info", "--model", &garbled], &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = zeno(&["model-info", "--model", "/nonexistent/x.json"], &[]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown flag: clap reports usage errors as 2.
    let out = zeno(&["estimate", "--frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn paper_check_passes_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let j1 = dir.path().join("a.json");
    let j2 = dir.path().join("b.json");

    let out1 = zeno(
        &["paper-check", "--seed", "0", "--out-json", j1.to_str().unwrap()],
        &[],
    );
    assert_eq!(out1.status.code(), Some(0), "{}", stdout_str(&out1));
    assert!(stdout_str(&out1).contains("overall: PASS"));

    let out2 = zeno(
        &["paper-check", "--seed", "0", "--out-json", j2.to_str().unwrap()],
        &[],
    );
    assert_eq!(out2.status.code(), Some(0));

    let b1 = fs::read(&j1).unwrap();
    let b2 = fs::read(&j2).unwrap();
    assert!(!b1.is_empty());
    assert_eq!(b1, b2, "paper-check JSON must be byte-identical per seed");
    assert_eq!(out1.stdout, out2.stdout);
}

#[test]
fn scan_emits_grid_csv_and_svgs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scan.json");
    fs::write(
        &config,
        r#"{
            "model": {"type": "two_level", "omega": 1.0, "delta": 1.0},
            "tau_grid": [1e-9, 1e-8, 1e-7, 1e-6],
            "pi_minus_nu_grid": [1e-5, 1e-4, 1e-3],
            "q_rounds": 100,
            "mode": "both"
        }"#,
    )
    .unwrap();
    let csv1 = dir.path().join("scan1.csv");
    let svg_e = dir.path().join("exact.svg");
    run_scan_cmd(&config, &csv1, &svg_e, dir.path().join("second.svg"), "4");

    let text = fs::read_to_string(&csv1).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(
        lines[0],
        "tau,nu,pi_minus_nu,margin,snr,n_used,p_all_exact,p_all_second_order,abs_diff"
    );
    assert_eq!(lines.len(), 1 + 4 * 3);
    for line in &lines[1..] {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert!(v.is_finite());
        }
    }
    let svg = fs::read_to_string(&svg_e).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("</svg>"));

    // The emitted bytes do not depend on the worker-pool width.
    let csv2 = dir.path().join("scan2.csv");
    run_scan_cmd(&config, &csv2, dir.path().join("e2.svg"), dir.path().join("s2.svg"), "1");
    assert_eq!(fs::read(&csv1).unwrap(), fs::read(&csv2).unwrap());
}

fn run_scan_cmd(
    config: &Path,
    csv: impl AsRef<Path>,
    svg_exact: impl AsRef<Path>,
    svg_second: impl AsRef<Path>,
    threads: &str,
) {
    let out = zeno(
        &[
            "scan",
            "--config",
            config.to_str().unwrap(),
            "--out-csv",
            csv.as_ref().to_str().unwrap(),
            "--out-svg-exact",
            svg_exact.as_ref().to_str().unwrap(),
            "--out-svg-2nd",
            svg_second.as_ref().to_str().unwrap(),
        ],
        &[("RAYON_NUM_THREADS", threads)],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scan_single_cell_frozen_model() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("frozen.json");
    fs::write(
        &config,
        r#"{
            "model": {"type": "two_level", "omega": 0.0, "delta": 1.0},
            "tau_grid": [1e-3],
            "pi_minus_nu_grid": [1e-2],
            "mode": "both"
        }"#,
    )
    .unwrap();
    let csv = dir.path().join("one.csv");
    run_scan_cmd(&config, &csv, dir.path().join("e.svg"), dir.path().join("s.svg"), "2");
    let text = fs::read_to_string(&csv).unwrap();
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<f64> = row.split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[6], 1.0, "p_all_exact");
    assert_eq!(fields[7], 1.0, "p_all_second_order");
}

#[test]
fn scan_missing_outputs_exit_2() {
    let out = zeno(&["scan"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
