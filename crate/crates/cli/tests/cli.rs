//! End-to-end tests of the command-line interface: argument handling, exit
//! codes, configuration precedence, and the pinned report schemas.

use std::path::{Path, PathBuf};
use std::process::Output;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_splashguard")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join("splashguard-cli-tests")
        .join(format!("{name}-{}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .env("SPLASHGUARD_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap_or("").to_string()
}

#[test]
fn help_lists_every_documented_key() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for key in [
        "scenario.name",
        "scenario.kind",
        "grid.n",
        "run.dt",
        "run.steps",
        "run.normalization",
        "sheet.omega",
        "splash.d0",
        "splash.a",
        "splash.eps1",
        "splash.eps2",
        "splash.eps4",
        "splash.eps5",
        "bulk.kind",
        "bulk.cx",
        "bulk.cy",
        "bulk.radius",
        "bulk.omega0",
        "bulk.h",
        "monitor.p",
        "params.rho_e",
        "params.rho_ns",
        "params.nu_ns",
        "params.g",
        "params.sigma",
        "params.a_const",
        "params.horizon",
        "guards.ca_floor",
        "guards.min_tangent",
        "curve.path",
        "frame.rho_max",
        "frame.n_rho",
        "detect.tol",
        "sweep.d_max",
        "sweep.count",
        "sweep.decade_step",
        "sweep.a",
        "sweep.rho_max",
        "sweep.c_near",
        "sweep.curve_n",
        "check.slope_floor",
        "check.near_factor",
        "recover.case",
        "recover.n",
        "recover.nu",
        "recover.tol",
        "certify.input",
        "certify.c",
        "certify.c_headroom",
        "certify.eps4",
        "certify.k",
        "SPLASHGUARD_THREADS",
    ] {
        assert!(text.contains(key), "help is missing `{key}`");
    }
}

#[test]
fn unknown_flag_is_named_in_the_usage_error() {
    let out = run(&["selftest", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("--frobnicate"), "stderr: {err}");
}

#[test]
fn unknown_subcommand_and_missing_subcommand_exit_1() {
    assert_eq!(run(&["explode"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("flat-sheet-velocity: ok"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn simulate_writes_the_pinned_monitor_schema() {
    let dir = scratch("simulate");
    let out = run(&[
        "simulate",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "scenario.kind=approach",
        "--set",
        "grid.n=256",
        "--set",
        "run.dt=0.05",
        "--set",
        "run.steps=3",
        "--set",
        "splash.d0=0.02",
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    assert_eq!(first_line(&dir.join("monitor.csv")), "t, I_p, CA, sup_omega");
    let summary = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!(v["aborted"].is_null());
}

#[test]
fn set_overrides_take_precedence_over_the_config_file() {
    let dir = scratch("precedence");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "scenario.kind = approach   # comment\n\
         grid.n = 256\n\
         run.dt = 0.05\n\
         run.steps = 9\n\
         splash.d0 = 0.02\n",
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "run.steps=2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let rows = std::fs::read_to_string(dir.join("monitor.csv")).unwrap();
    // header + initial sample + 2 steps
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn malformed_config_reports_file_and_line() {
    let dir = scratch("badcfg");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "grid.n = 256\nthis line has no equals\n").unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.cfg:2"), "stderr: {err}");
}

#[test]
fn detect_splash_finds_the_family_pinch() {
    let dir = scratch("detect");
    let out = run(&[
        "detect-splash",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "grid.n=1024",
        "--set",
        "splash.d0=1e-3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("detect.json")).unwrap()).unwrap();
    assert_eq!(v["candidate"], true);
    assert!((v["d"].as_f64().unwrap() - 1e-3).abs() < 1e-5);
    assert_eq!(v["geometry_ok"], true);
    assert_eq!(v["invariants_ok"], true);
    assert!(dir.join("frame.json").exists());
}

#[test]
fn detect_splash_on_a_flat_curve_exits_2() {
    let dir = scratch("detect-flat");
    let curve = dir.join("flat.curve");
    splashguard_core::PeriodicCurve::flat(256)
        .write_to(&curve)
        .unwrap();
    let out = run(&[
        "detect-splash",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        &format!("curve.path={}", curve.display()),
    ]);
    assert_eq!(out.status.code(), Some(2), "{:?}", out);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("detect.json")).unwrap()).unwrap();
    assert_eq!(v["candidate"], false);
}

#[test]
fn verify_bound_writes_the_pinned_report_schema() {
    let dir = scratch("verify");
    let out = run(&[
        "verify-bound",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "sweep.count=2",
        "--set",
        "sweep.curve_n=512",
        // Two points spanning half a decade sit in the pre-asymptotic
        // regime; loosen the slope floor — this test pins the schema.
        "--set",
        "check.slope_floor=-0.15",
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    assert_eq!(
        first_line(&dir.join("bound_report.csv")),
        "d, v_diff, w_diff, ratio_v, ratio_w, I_near, I_far"
    );
    // d column strictly decreasing
    let body = std::fs::read_to_string(dir.join("bound_report.csv")).unwrap();
    let ds: Vec<f64> = body
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().trim().parse().unwrap())
        .collect();
    assert!(ds.windows(2).all(|w| w[1] < w[0]));
    assert!(dir.join("bound_summary.json").exists());
}

#[test]
fn recover_gradient_writes_the_pinned_recovery_schema() {
    let dir = scratch("recover");
    let out = run(&[
        "recover-gradient",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "recover.case=shear",
        "--set",
        "recover.n=32",
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    assert_eq!(
        first_line(&dir.join("recovery.csv")),
        "alpha, g11, g12, g21, g22, residual, ctt1, ctt2, ctn1, ctn2"
    );
    let v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("recovery_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["max_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn recover_gradient_flags_an_impossible_tolerance() {
    let dir = scratch("recover-tight");
    let out = run(&[
        "recover-gradient",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "recover.case=principal",
        "--set",
        "recover.n=64",
        "--set",
        "recover.tol=1e-300",
    ]);
    assert_eq!(out.status.code(), Some(2), "{:?}", out);
}

#[test]
fn certify_accepts_a_consistent_trace_and_rejects_a_violating_one() {
    let dir = scratch("certify");
    let good = dir.join("good.csv");
    let bad = dir.join("bad.csv");
    let mut g = String::from("t, dtilde\n");
    let mut b = String::from("t, dtilde\n");
    let (c, d0) = (0.8f64, 20.0f64);
    for i in 0..60 {
        let t = 0.01 * i as f64;
        g.push_str(&format!("{t}, {}\n", (d0.ln() * (c * t).exp()).exp()));
        b.push_str(&format!("{t}, {}\n", d0 * (8.0 * t * t).exp()));
    }
    std::fs::write(&good, g).unwrap();
    std::fs::write(&bad, b).unwrap();

    let out = run(&[
        "certify",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        &format!("certify.input={}", good.display()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("certificate.json")).unwrap())
            .unwrap();
    assert_eq!(v["pass"], true);

    let out = run(&[
        "certify",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        &format!("certify.input={}", bad.display()),
        "--set",
        "certify.c=0.5",
    ]);
    assert_eq!(out.status.code(), Some(2), "{:?}", out);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("certificate.json")).unwrap())
            .unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn certify_without_input_is_an_error_not_a_check_failure() {
    let dir = scratch("certify-noinput");
    let out = run(&["certify", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
