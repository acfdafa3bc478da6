// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn xbar(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xbar-lfi"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn value(report: &str, key: &str) -> f64 {
    let line = report
        .lines()
        .find(|l| l.starts_with(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from\n{report}"));
    line.split(" = ").nth(1).unwrap().trim().parse().unwrap()
}

#[test]
fn table1_writes_the_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let o = xbar(&["table1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "table1.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r_ohm,i_inj_ua,delta_i_ua,col"));
    assert_eq!(lines.count(), 25);
    let report = read(dir.path(), "table1_report.txt");
    assert!(value(&report, "max_rel_err_pct") < 3.0);
    assert!(value(&report, "mean_rel_err_pct") < 1.5);
}

#[test]
fn calibrate_reports_the_constants() {
    let dir = tempfile::tempdir().unwrap();
    assert!(xbar(&["calibrate"], dir.path()).status.success());
    let report = read(dir.path(), "calibrate_report.txt");
    let a = value(&report, "a_kohm");
    let b = value(&report, "b_kohm");
    assert!((a - 1.501).abs() < 0.01, "{a}");
    assert!((b + 1.47).abs() < 0.03, "{b}");
}

#[test]
fn weak_hysteresis_is_a_line_through_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("weak.toml");
    std::fs::write(&cfg, "[hysteresis]\namplitude_ma = 0.04\ncycles = 2\n").unwrap();
    let out = dir.path().join("out");
    let o = xbar(&["hysteresis", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out, "hysteresis.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_s,i_a,v_v,x_m,r_ohm"));
    let pts: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect();
    let slope = pts.iter().find(|p| p.0.abs() > 1e-6).map(|p| p.1 / p.0).unwrap();
    for (i, v) in pts {
        assert!((v - slope * i).abs() <= 1e-12 * slope * 4e-5, "({i}, {v})");
    }
}

#[test]
fn corrupt_and_impact_run_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    assert!(xbar(&["corrupt"], dir.path()).status.success());
    let report = read(dir.path(), "corrupt_report.txt");
    assert!((value(&report, "r_after_ohm") - 336.0).abs() < 1.0);
    assert!(xbar(&["impact", "--seed", "3"], dir.path()).status.success());
    let report = read(dir.path(), "impact_report.txt");
    assert!(value(&report, "max_rel_deviation") > 0.0);
    assert!(read(dir.path(), "readout_after.csv").starts_with("col,i_amps\n"));
}

#[test]
fn scan_extract_recovers_the_region() {
    let dir = tempfile::tempdir().unwrap();
    let o = xbar(&["scan-extract"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "extraction.csv");
    assert!(csv.starts_with("row,col,r_true_ohm,r_est_ohm,err_pct\n"));
    assert_eq!(csv.lines().count(), 1 + 256);
    assert!(read(dir.path(), "scan_plan.csv").starts_with("step_index,x_um,y_um\n"));
    let report = read(dir.path(), "scan-extract_report.txt");
    assert!(value(&report, "rms_rel_err_pct") < 1.0);

    // The curved shunt is calibrated at campaign currents, well above the
    // per-cell share of a 3 um spot, so recovery carries a small bias.
    assert!(xbar(&["scan-extract", "--preset", "paper-weak-nonlinear"], dir.path()).status.success());
    let report = read(dir.path(), "scan-extract_report.txt");
    let rms = value(&report, "rms_rel_err_pct");
    assert!(rms > 1.0 && rms < 3.0, "{rms}");
}

#[test]
fn weights_load_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("w.csv"),
        "row,col,r_ohm\n0,0,5000\n0,1,8000\n1,0,12000\n1,1,20000\n",
    )
    .unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[array]\nrows = 2\ncols = 2\nweights_csv = \"w.csv\"\n[scan]\nrows = 2\ncols = 2\n[beam]\ndiameter = 1.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = xbar(&["scan-extract", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        read(&out, "weights.csv"),
        "row,col,r_ohm\n0,0,5000.0\n0,1,8000.0\n1,0,12000.0\n1,1,20000.0\n"
    );
}

#[test]
fn failures_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let o = xbar(&["bogus"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[beam]\ndiameter = 60\n").unwrap();
    let o = xbar(&["scan-extract", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("beam.diameter") && err.contains("1–50 μm"), "{err}");

    let o = xbar(&["table1", "--config", "/nonexistent/x.toml"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/x.toml"));

    // An output path under a regular file cannot be created.
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = xbar(&["corrupt"], &blocker.join("sub"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("creating"));
}
