use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multimem"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv(path: PathBuf) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn spectrum_lossless_case_b() {
    let dir = scratch("spectrum");
    let d = dir.to_str().unwrap();
    ok(&["spectrum", "--case", "b", "--omega-min", "-4", "--omega-max", "4", "--points", "2000", "--out", d, "--svg"]);
    let (header, rows) = csv(dir.join("spectrum.csv"));
    assert_eq!(header, ["omega", "re_s", "im_s", "efficiency", "tau", "tau_r", "noise_gain"]);
    assert_eq!(rows.len(), 2000);
    for r in &rows {
        assert!((r[3] - 1.0).abs() < 1e-12, "efficiency {} at omega {}", r[3], r[0]);
    }
    let summary = json(dir.join("spectrum_summary.json"));
    assert!(summary["max_abs_efficiency_minus_one"].as_f64().unwrap() < 1e-12);
    // tau_r near the centre of the plateau
    let centre = rows.iter().min_by(|a, b| a[0].abs().total_cmp(&b[0].abs())).unwrap();
    assert!((centre[5] - 1.0).abs() < 1e-3, "tau_r = {}", centre[5]);
    let svg = fs::read_to_string(dir.join("spectrum.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn spectrum_output_is_deterministic() {
    let a = scratch("det_a");
    let b = scratch("det_b");
    for d in [&a, &b] {
        ok(&["spectrum", "--case", "a", "--points", "500", "--out", d.to_str().unwrap()]);
    }
    assert_eq!(fs::read(a.join("spectrum.csv")).unwrap(), fs::read(b.join("spectrum.csv")).unwrap());
}

#[test]
fn spectrum_pole_names_frequency() {
    let dir = scratch("pole");
    let out = run(&["spectrum", "--case", "b", "--omega-min", "-4", "--omega-max", "4", "--points", "2001", "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pole") && err.contains("omega"), "{err}");
}

#[test]
fn eigen_scan_finds_merges() {
    for (case, expect) in [("a", 7.0), ("b", 5.5)] {
        let dir = scratch(&format!("eigen_{case}"));
        ok(&["eigen-scan", "--case", case, "--k-min", "0", "--k-max", "12", "--k-steps", "241", "--out", dir.to_str().unwrap()]);
        let merge = json(dir.join("eigen_summary.json"))["merge_point"].as_f64().unwrap();
        assert!((merge - expect).abs() / expect < 0.1, "case {case}: merge at {merge}");
        let (header, rows) = csv(dir.join("eigen_scan.csv"));
        assert_eq!(&header[..2], ["k", "min_distance"]);
        assert_eq!(rows.len(), 241);
    }
}

#[test]
fn eigen_scan_reports_no_merge() {
    let dir = scratch("eigen_none");
    let out = run(&["eigen-scan", "--case", "b", "--k-min", "0", "--k-max", "1", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("no merge in range"));
    let summary = json(dir.join("eigen_summary.json"));
    assert!(summary["merge_point"].is_null());
    assert_eq!(summary["summary"], "no merge in range");
}

#[test]
fn optimize_matches_reference_designs() {
    let dir = scratch("opt_a");
    ok(&["optimize", "--weights", "1,1,1", "--ratio", "4", "--out", dir.to_str().unwrap(), "--svg"]);
    let design = json(dir.join("design.json"));
    assert!((design["config"]["f"].as_f64().unwrap() - 1.119).abs() < 1e-3);
    assert!((design["kappa"].as_f64().unwrap() - 7.256).abs() / 7.256 < 5e-3);
    let (header, rows) = csv(dir.join("tau_r.csv"));
    assert_eq!(header, ["omega", "tau_r"]);
    assert!(!rows.is_empty());

    let dir = scratch("opt_b");
    ok(&["optimize", "--weights", "0.8,1,0.8", "--ratio", "3", "--out", dir.to_str().unwrap()]);
    let design = json(dir.join("design.json"));
    assert!((design["kappa"].as_f64().unwrap() - 5.546).abs() / 5.546 < 5e-3);
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = scratch("errors");
    let d = dir.to_str().unwrap();
    let cases: &[&[&str]] = &[
        &["optimize", "--weights", "1,1,1", "--ratio", "0", "--out", d],
        &["optimize", "--weights", "1,1", "--ratio", "3", "--out", d],
        &["simulate", "--case", "b", "--dt", "5", "--out", d],
        &["sweep", "--case", "b", "--sweep", "gamma=0:0.01:0", "--out", d],
        &["sweep", "--case", "b", "--sweep", "temperature=0:1:3", "--out", d],
        &["spectrum", "--out", d],
    ];
    for args in cases {
        let out = run(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
    let out = run(cases[4]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown sweep parameter"));
}

#[test]
fn simulate_storage_time_does_not_change_efficiency() {
    let mut eta = Vec::new();
    for m in ["0", "2"] {
        let dir = scratch(&format!("sim_{m}"));
        ok(&["simulate", "--case", "b", "--cycles", m, "--sigma", "1", "--dt", "1e-3", "--out", dir.to_str().unwrap()]);
        let summary = json(dir.join("summary.json"));
        eta.push(summary["efficiency"].as_f64().unwrap());
        assert!(summary["energy_closure_error"].as_f64().unwrap() < 1e-8);
        let (header, rows) = csv(dir.join("timeseries.csv"));
        assert_eq!(header.first().unwrap(), "t");
        assert_eq!(header.last().unwrap(), "J");
        assert!(rows.iter().all(|r| r.len() == header.len()));
    }
    assert!((eta[0] - eta[1]).abs() < 1e-3, "eta = {eta:?}");
}

#[test]
fn simulate_with_config_schedule() {
    let dir = scratch("sim_cfg");
    let cfg = dir.join("memory.json");
    fs::write(
        &cfg,
        r#"{"delta": 1.0, "f": 1.038, "coupling_weights": [0.8, 1.0, 0.8], "offsets": [-1.0, 0.0, 1.0],
            "gamma": [0.0, 0.0, 0.0], "gamma0": 0.0, "kappa0": 5.546,
            "pulse": {"sigma": 1.0, "center": 8.0},
            "schedule": {"segments": [[0.0, 5.546]]}}"#,
    )
    .unwrap();
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--t-end", "40", "--out", dir.to_str().unwrap()]);
    let summary = json(dir.join("summary.json"));
    // always-on coupling: the lossless memory returns the whole pulse
    assert!(summary["energy_closure_error"].as_f64().unwrap() < 1e-8);
    let e = &summary["energy"];
    let out = e["echo"].as_f64().unwrap() + e["reflected_before"].as_f64().unwrap();
    assert!((out - 1.0).abs() < 1e-4, "returned energy {out}");
}

#[test]
fn sweep_gamma_is_monotone_with_fidelity() {
    let dir = scratch("sweep");
    ok(&["sweep", "--case", "b", "--cycles", "1", "--sweep", "gamma=0:0.01:3", "--out", dir.to_str().unwrap(), "--svg"]);
    let (header, rows) = csv(dir.join("sweep.csv"));
    assert_eq!(header[0], "gamma");
    let eta = header.iter().position(|h| h == "eta").unwrap();
    let fid = header.iter().position(|h| h == "waveform_fidelity").unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [0.0, 0.005, 0.01]);
    assert!(rows[0][eta] > rows[1][eta] && rows[1][eta] > rows[2][eta]);
    assert!(rows.iter().all(|r| r[fid] > 0.0 && r[fid] <= 1.0));
    for i in 0..3 {
        let job = json(dir.join("sweep_jobs").join(format!("job_{i:03}.json")));
        assert_eq!(job["gamma"].as_f64().unwrap(), rows[i][0]);
    }
}
