//! End-to-end tests of the command-line surface: exit codes, file outputs,
//! byte-level determinism, and scenario round-trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_coverage-tool")
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coverage-tool-test-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("COVERAGE_TOOL_SAMPLES")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// Data outputs (everything except the manifest, which carries wall-clock
/// timing) must be byte-identical for equal (config, seed).
fn assert_outputs_identical(a: &Path, b: &Path) {
    let mut names: Vec<String> = fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let left = read(&a.join(&name));
        let right = read(&b.join(&name));
        assert!(left == right, "{name} differs between runs");
    }
}

#[test]
fn rate_outputs_are_deterministic_across_runs_and_workers() {
    let dir = work_dir("rate-determinism");
    let out1 = dir.join("run1");
    let out2 = dir.join("run2");
    let out4 = dir.join("run4");
    for (out, workers) in [(&out1, "1"), (&out2, "1"), (&out4, "4")] {
        let o = run(&[
            "--samples",
            "2000",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
            "rate",
            "--d-min",
            "0.8",
            "--d-max",
            "1.2",
            "--d-step",
            "0.1",
        ]);
        assert!(
            o.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert_outputs_identical(&out1, &out2);
    assert_outputs_identical(&out1, &out4);
}

#[test]
fn coverage_outputs_are_deterministic_across_workers() {
    let dir = work_dir("coverage-determinism");
    let out1 = dir.join("w1");
    let out4 = dir.join("w4");
    for (out, workers) in [(&out1, "1"), (&out4, "4")] {
        let o = run(&[
            "--samples",
            "500",
            "--seed",
            "3",
            "--grid-resolution",
            "0.25",
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
            "coverage",
            "--mode",
            "cs",
        ]);
        assert!(
            o.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert_outputs_identical(&out1, &out4);
}

#[test]
fn rate_csv_has_header_and_decreasing_exact_column() {
    let dir = work_dir("rate-csv");
    let o = run(&[
        "--samples",
        "500",
        "--out",
        dir.to_str().unwrap(),
        "rate",
        "--d-min",
        "0.5",
        "--d-max",
        "1.5",
        "--d-step",
        "0.25",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(read(&dir.join("rate.csv"))).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "d,rate_exact,rate_highsnr,rate_mc_mean,rate_mc_se"
    );
    let mut prev_exact = f64::INFINITY;
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 5);
        assert!(fields[1] < prev_exact, "rate_exact not decreasing");
        prev_exact = fields[1];
        // Monte Carlo column stays within 3 standard errors of exact
        assert!(
            (fields[3] - fields[1]).abs() <= 3.0 * fields[4],
            "mc {} vs exact {} (se {})",
            fields[3],
            fields[1],
            fields[4]
        );
    }
}

#[test]
fn zero_samples_is_a_config_error() {
    let dir = work_dir("zero-samples");
    let o = run(&["--samples", "0", "--out", dir.to_str().unwrap(), "rate"]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn unknown_mode_is_a_config_error() {
    let dir = work_dir("bad-mode");
    let o = run(&[
        "--out",
        dir.to_str().unwrap(),
        "coverage",
        "--mode",
        "bogus",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimal_distance_reproduces_reference_placement() {
    let dir = work_dir("optimal-distance");
    let o = run(&["--out", dir.to_str().unwrap(), "optimal-distance"]);
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("optimal_distance.json"))).unwrap();
    let d_star = json["d_star"].as_f64().unwrap();
    let rate_check = json["rate_check"].as_f64().unwrap();
    assert!((d_star - 1.0).abs() <= 0.02, "d* = {d_star}");
    assert!((rate_check - 5.5).abs() <= 1e-3, "rate check {rate_check}");
    assert!(json["iterations"].as_u64().unwrap() > 0);
}

#[test]
fn unreachable_rate_exits_4() {
    let dir = work_dir("unreachable");
    let o = run(&[
        "--rate",
        "1e9",
        "--out",
        dir.to_str().unwrap(),
        "optimal-distance",
    ]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn scenario_echo_round_trips_to_identical_outputs() {
    let dir = work_dir("round-trip");
    let scenario_path = dir.join("scenario.txt");
    fs::write(
        &scenario_path,
        "u2 = 0.9\nrate = 5\nsamples = 800\nseed = 11\np1_db = 12.5\n",
    )
    .unwrap();
    let out1 = dir.join("first");
    let o = run(&[
        "--scenario",
        scenario_path.to_str().unwrap(),
        "--out",
        out1.to_str().unwrap(),
        "rate",
        "--d-min",
        "0.6",
        "--d-max",
        "1.4",
        "--d-step",
        "0.2",
    ]);
    assert!(o.status.success());
    // feed the emitted echo back in
    let out2 = dir.join("second");
    let o = run(&[
        "--scenario",
        out1.join("scenario.txt").to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "rate",
        "--d-min",
        "0.6",
        "--d-max",
        "1.4",
        "--d-step",
        "0.2",
    ]);
    assert!(o.status.success());
    assert_outputs_identical(&out1, &out2);
}

#[test]
fn coverage_emits_mask_boundary_and_area() {
    let dir = work_dir("coverage-files");
    let o = run(&[
        "--samples",
        "500",
        "--grid-resolution",
        "0.2",
        "--rate",
        "4",
        "--out",
        dir.to_str().unwrap(),
        "coverage",
        "--mode",
        "norelay",
    ]);
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let mask = String::from_utf8(read(&dir.join("mask.csv"))).unwrap();
    assert!(mask.starts_with("u3,v3,covered\n"));
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("coverage.json"))).unwrap();
    assert_eq!(json["mode"], "norelay");
    assert!(json["area"].as_f64().unwrap() > 0.0);
    let boundary = String::from_utf8(read(&dir.join("boundary.csv"))).unwrap();
    assert!(boundary.starts_with("polyline,vertex,x,y\n"));
    assert!(boundary.lines().count() > 4);
}

#[test]
fn df_region_empties_past_the_optimal_distance() {
    let dir = work_dir("df-empty");
    let o = run(&[
        "--samples",
        "500",
        "--grid-resolution",
        "0.25",
        "--u2",
        "1.05",
        "--out",
        dir.to_str().unwrap(),
        "coverage",
        "--mode",
        "df",
    ]);
    assert!(o.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("coverage.json"))).unwrap();
    assert_eq!(json["area"].as_f64().unwrap(), 0.0);
    assert_eq!(json["covered_cells"].as_u64().unwrap(), 0);
}

#[test]
fn env_var_overrides_default_samples_and_is_echoed() {
    let dir = work_dir("env-samples");
    let o = Command::new(bin())
        .args([
            "--out",
            dir.to_str().unwrap(),
            "rate",
            "--d-min",
            "1",
            "--d-max",
            "1.2",
            "--d-step",
            "0.1",
        ])
        .env("COVERAGE_TOOL_SAMPLES", "600")
        .output()
        .unwrap();
    assert!(o.status.success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["samples"].as_u64().unwrap(), 600);
    assert_eq!(manifest["samples_env_override"], true);
    let echo = String::from_utf8(read(&dir.join("scenario.txt"))).unwrap();
    assert!(echo.contains("samples = 600"));
}

#[test]
fn validate_quick_passes_and_tampered_tolerance_fails_by_name() {
    let dir = work_dir("validate");
    let o = run(&[
        "--out",
        dir.join("ok").to_str().unwrap(),
        "validate",
        "--suite",
        "quick",
    ]);
    assert!(
        o.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("PASS siso_closed_form"));

    // run twice: the report is deterministic
    let o2 = run(&[
        "--out",
        dir.join("ok2").to_str().unwrap(),
        "validate",
        "--suite",
        "quick",
    ]);
    let stdout2 = String::from_utf8(o2.stdout).unwrap();
    assert_eq!(stdout, stdout2);

    // impossible tolerance must surface as a named failure with exit 1
    let tampered = Command::new(bin())
        .args([
            "--out",
            dir.join("bad").to_str().unwrap(),
            "validate",
            "--suite",
            "quick",
        ])
        .env("RELAY_COVERAGE_TOL_SISO_CLOSED_FORM", "1e-30")
        .output()
        .unwrap();
    assert_eq!(tampered.status.code(), Some(1));
    let out = String::from_utf8(tampered.stdout).unwrap();
    assert!(
        out.contains("FAIL siso_closed_form") && out.contains("tolerance overridden"),
        "{out}"
    );
}

#[test]
fn repro_recipe_rejects_unknown_figure() {
    let dir = work_dir("repro-bad");
    let o = run(&["--out", dir.to_str().unwrap(), "repro", "fig99"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repro_fig8_reports_linear_fit() {
    let dir = work_dir("repro-fig8");
    let o = run(&["--out", dir.to_str().unwrap(), "repro", "fig8"]);
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("fig8").join("summary.json"))).unwrap();
    assert!(json["r_squared"].as_f64().unwrap() > 0.99);
}
