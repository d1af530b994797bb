//! End-to-end tests of the command-line binary: exit codes, output formats,
//! and byte-level determinism of the simulation pipeline.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mubtriple::cli::RunConfig;
use mubtriple::frft::{read_wavefunction_csv, write_wavefunction_csv, SampledWavefunction};
use mubtriple::gaussian::GaussianState;
use mubtriple::spdc::SpdcParams;
use num_complex::Complex64;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mubtriple")
}

fn run_in(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    run_in(dir, args, &[])
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn optimize_prints_the_known_minimum_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(dir.path(), &["optimize"]);
    let value = stdout_json(&first);
    assert!((value["eta"].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert!((value["xi"].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert!((value["g_min"].as_f64().unwrap() - 0.125).abs() < 1e-8);
    assert_eq!(value["converged"], serde_json::Value::Bool(true));
    let second = run(dir.path(), &["optimize"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn optimize_grid_scan_is_monotone_around_the_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["optimize", "--grid-scan"]);
    let value = stdout_json(&out);
    let rows = value["grid"].as_array().unwrap();
    let g: Vec<f64> = rows.iter().map(|r| r["g"].as_f64().unwrap()).collect();
    let eta: Vec<f64> = rows.iter().map(|r| r["eta"].as_f64().unwrap()).collect();
    let min_idx = eta.iter().position(|&e| (e - 0.5).abs() < 1e-12).unwrap();
    for k in 1..=min_idx {
        assert!(g[k] <= g[k - 1], "not decreasing before the minimum at row {k}");
    }
    for k in min_idx + 1..g.len() {
        assert!(g[k] >= g[k - 1], "not increasing after the minimum at row {k}");
    }
    assert!((g[min_idx] - 0.125).abs() < 1e-12);
}

#[test]
fn ur_vacuum_state_satisfies_all_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vacuum.json");
    fs::write(&path, serde_json::to_string(&GaussianState::vacuum(1)).unwrap()).unwrap();
    let out = run(dir.path(), &["ur", "--state", "vacuum.json"]);
    let value = stdout_json(&out);
    assert_eq!(value["all_satisfied"], serde_json::Value::Bool(true));
    let tp = value["triple_product"].as_f64().unwrap();
    assert!((tp - 0.125).abs() <= 1e-15, "triple product {tp}");
    assert!(out.status.code() == Some(0));
}

#[test]
fn ur_violated_state_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("squeezed_both.json");
    fs::write(
        &path,
        r#"{"n_modes":1,"mean":[0.0,0.0],"cov":[[0.1,0.0],[0.0,0.1]]}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["ur", "--state", "squeezed_both.json"]);
    assert_eq!(out.status.code(), Some(2));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["all_satisfied"], serde_json::Value::Bool(false));
    // Variance 0.1 on all three axes: product 0.001, far below 1/8.
    assert!((value["triple_product"].as_f64().unwrap() - 0.001).abs() < 1e-12);
}

#[test]
fn ur_missing_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["ur", "--state", "no_such_file.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn ur_two_mode_source_state_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::default();
    fs::write(dir.path().join("run.json"), serde_json::to_string(&config).unwrap()).unwrap();
    let out = run(dir.path(), &["ur", "--config", "run.json"]);
    let value = stdout_json(&out);
    assert_eq!(value["all_satisfied"], serde_json::Value::Bool(true));
    assert_eq!(value["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_is_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, envs) in [
        ("a", vec![]),
        ("b", vec![]),
        ("t1", vec![("RAYON_NUM_THREADS", "1")]),
        ("t4", vec![("RAYON_NUM_THREADS", "4")]),
    ] {
        let out = run_in(dir.path(), &["simulate", "--seed", "42", "--out", sub], &envs);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for plane in ["x", "u", "v"] {
        let name = format!("scan_{plane}.csv");
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        for sub in ["b", "t1", "t4"] {
            let other = fs::read(dir.path().join(sub).join(&name)).unwrap();
            assert_eq!(a, other, "plane {plane} differs in {sub}");
        }
    }
}

#[test]
fn simulate_respects_plane_subset() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["simulate", "--seed", "7", "--out", "sub", "--planes", "x"]);
    assert!(out.status.success());
    assert!(dir.path().join("sub/scan_x.csv").exists());
    assert!(!dir.path().join("sub/scan_u.csv").exists());
    let full = run(dir.path(), &["simulate", "--seed", "7", "--out", "full"]);
    assert!(full.status.success());
    // Plane x keeps the base seed, so the subset run reproduces it exactly.
    assert_eq!(
        fs::read(dir.path().join("sub/scan_x.csv")).unwrap(),
        fs::read(dir.path().join("full/scan_x.csv")).unwrap()
    );
}

#[test]
fn certify_simulated_run_detects_entanglement() {
    let dir = tempfile::tempdir().unwrap();
    let sim = run(dir.path(), &["simulate", "--seed", "42", "--out", "."]);
    assert!(sim.status.success());
    let out = run(
        dir.path(),
        &["certify", "scan_x.csv", "scan_u.csv", "scan_v.csv", "--out", "report.json"],
    );
    let value = stdout_json(&out);
    assert_eq!(value["criteria"]["minus"]["entangled_verdict"], serde_json::Value::Bool(true));
    assert!(value["criteria"]["minus"]["product"].as_f64().unwrap() < 0.05);
    // The anti-squeezed sign carries no signature.
    assert_eq!(value["criteria"]["plus"]["entangled_verdict"], serde_json::Value::Bool(false));
    assert!(value["criteria"]["plus"]["product"].as_f64().unwrap() > 1.0);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("entangled"), "summary missing: {stderr}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["planes"].as_array().unwrap().len(), 3);
}

#[test]
fn certify_equal_widths_reports_not_detected() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::default();
    config.spdc = SpdcParams::new(1.0, 1.0).unwrap();
    fs::write(dir.path().join("run.json"), serde_json::to_string(&config).unwrap()).unwrap();
    let sim = run(dir.path(), &["simulate", "--config", "run.json", "--seed", "9", "--out", "."]);
    assert!(sim.status.success());
    let out = run(
        dir.path(),
        &["certify", "scan_x.csv", "scan_u.csv", "scan_v.csv", "--sign", "minus"],
    );
    let value = stdout_json(&out);
    assert_eq!(value["criteria"]["minus"]["entangled_verdict"], serde_json::Value::Bool(false));
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not detected"));
}

#[test]
fn certify_corrupted_csv_exits_1_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let sim = run(dir.path(), &["simulate", "--seed", "5", "--out", "."]);
    assert!(sim.status.success());
    let path = dir.path().join("scan_x.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("not,a,valid,row\n");
    fs::write(&path, text).unwrap();
    let out = run(
        dir.path(),
        &["certify", "scan_x.csv", "scan_u.csv", "scan_v.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn frft_rotates_ground_state_with_invariant_variance() {
    let dir = tempfile::tempdir().unwrap();
    let psi = SampledWavefunction::ground_state(256).unwrap();
    let mut buf = Vec::new();
    write_wavefunction_csv(&psi, &mut buf).unwrap();
    fs::write(dir.path().join("ground.csv"), &buf).unwrap();
    let out = run(
        dir.path(),
        &[
            "frft",
            "ground.csv",
            "--theta",
            "1.0471975511965976",
            "--out",
            "rotated.csv",
            "--report-variance",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rotated variance"));
    let text = fs::read_to_string(dir.path().join("rotated.csv")).unwrap();
    assert!(text.starts_with("# frft theta_rad=1.0471975511965976\n"));
    let reported: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# rotated_variance="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((reported - 0.5).abs() < 1e-9, "variance {reported}");
    let rotated = read_wavefunction_csv(text.as_bytes()).unwrap();
    assert_eq!(rotated.n(), 256);
}

#[test]
fn frft_zero_angle_reproduces_input_samples() {
    let dir = tempfile::tempdir().unwrap();
    let psi = SampledWavefunction::displaced_ground(128, 1.0, -0.5).unwrap();
    let mut buf = Vec::new();
    write_wavefunction_csv(&psi, &mut buf).unwrap();
    fs::write(dir.path().join("in.csv"), &buf).unwrap();
    let out = run(dir.path(), &["frft", "in.csv", "--theta", "0", "--out", "out.csv"]);
    assert!(out.status.success());
    let back = read_wavefunction_csv(fs::read_to_string(dir.path().join("out.csv")).unwrap().as_bytes())
        .unwrap();
    assert_eq!(back.amplitudes(), psi.amplitudes());
}

#[test]
fn frft_quarter_turn_matches_reference_dft() {
    let dir = tempfile::tempdir().unwrap();
    let psi = SampledWavefunction::displaced_ground(128, 0.7, 0.3).unwrap();
    let mut buf = Vec::new();
    write_wavefunction_csv(&psi, &mut buf).unwrap();
    fs::write(dir.path().join("in.csv"), &buf).unwrap();
    let out = run(
        dir.path(),
        &["frft", "in.csv", "--theta", "1.5707963267948966", "--out", "out.csv"],
    );
    assert!(out.status.success());
    let got = read_wavefunction_csv(fs::read_to_string(dir.path().join("out.csv")).unwrap().as_bytes())
        .unwrap();
    // Reference: centered forward DFT evaluated as a direct sum.
    let n = 128usize;
    let half = n as f64 / 2.0;
    let scale = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &a) in psi.amplitudes().iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * (j as f64 - half) * (k as f64 - half)
                / n as f64;
            acc += a * Complex64::from_polar(1.0, phase);
        }
        let diff = (got.amplitudes()[j] - scale * acc).norm();
        assert!(diff < 1e-6, "bin {j} differs by {diff}");
    }
}

#[test]
fn analyze_infers_plane_and_extracts_variance() {
    let dir = tempfile::tempdir().unwrap();
    let sim = run(dir.path(), &["simulate", "--seed", "11", "--out", "."]);
    assert!(sim.status.success());
    let out = run(dir.path(), &["analyze", "scan_u.csv"]);
    let value = stdout_json(&out);
    assert_eq!(value["plane"], serde_json::Value::String("U".into()));
    let vm = value["var_minus"]["value"].as_f64().unwrap();
    assert!((vm - 0.25).abs() < 0.05, "var_minus {vm}");
    let single = run(dir.path(), &["analyze", "scan_u.csv", "--sign", "minus"]);
    let value = stdout_json(&single);
    assert_eq!(value["sign"], serde_json::Value::String("minus".into()));
    assert!(value["variance"]["value"].as_f64().is_some());
}

#[test]
fn bad_usage_and_bad_schema_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let help = run(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let mut config = serde_json::to_value(RunConfig::default()).unwrap();
    config["schema_version"] = serde_json::Value::from(2);
    fs::write(dir.path().join("v2.json"), serde_json::to_string(&config).unwrap()).unwrap();
    let sim = run(dir.path(), &["simulate", "--config", "v2.json", "--out", "."]);
    assert_eq!(sim.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&sim.stderr).contains("schema_version"));
}
