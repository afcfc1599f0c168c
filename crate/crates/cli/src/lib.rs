//! Command-line front end: argument and configuration parsing plus report
//! emission for the simulation, splash-detection, bound-verification,
//! gradient-recovery, and certification pipelines.
//!
//! Exit codes: 0 on success, 1 on errors (usage, I/O, invalid configuration),
//! 2 when a requested check fails (envelope violation, failed certificate,
//! no splash candidate, excessive recovery residual). No other codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use splashguard_core::bounds::{
    envelope_sweep, splash_certificate, GronwallTrace, SweepConfig,
};
use splashguard_core::dynamics::{FluidParams, SheetState};
use splashguard_core::geometry::{chord_arc_min, PeriodicCurve};
use splashguard_core::kernels::{
    birkhoff_rott, BulkNormalization, BulkVorticity, GridWindow, RankineDisc, SmoothBump,
};
use splashguard_core::recovery::{
    check_weak_admissibility, manufactured_data, quadratic_principal_interface_data, recover_all,
    write_recovery_csv, InterfaceData,
};
use splashguard_core::scenarios::{
    prescribed_approach, run as run_scenario, splash_curve, Motion, Scenario, SplashCurveParams,
    StepGuards,
};
use splashguard_core::splash::{
    build_splash_frame, check_frame_invariants, find_closest_pair, verify_pair_conditions,
    SplashConfig,
};
use splashguard_core::{Mat2, Vec2};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

/// Subcommand tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    DetectSplash,
    VerifyBound,
    RecoverGradient,
    Certify,
    Selftest,
}

impl Subcommand {
    fn from_str(s: &str) -> Option<Self> {
        match s {
            "simulate" => Some(Self::Simulate),
            "detect-splash" => Some(Self::DetectSplash),
            "verify-bound" => Some(Self::VerifyBound),
            "recover-gradient" => Some(Self::RecoverGradient),
            "certify" => Some(Self::Certify),
            "selftest" => Some(Self::Selftest),
            _ => None,
        }
    }
}

/// A fully parsed invocation.
#[derive(Debug, Clone)]
pub struct Command {
    pub sub: Subcommand,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    /// `key=value` overrides, applied over file values in order.
    pub overrides: Vec<(String, String)>,
}

/// Outcome of argument parsing.
pub enum Parsed {
    Help,
    Run(Command),
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn parse_args(argv: &[String]) -> Result<Parsed, UsageError> {
    let mut sub = None;
    let mut config = None;
    let mut out = PathBuf::from("out");
    let mut overrides = Vec::new();
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--help" | "-h" => return Ok(Parsed::Help),
            "--config" => {
                let v = it
                    .next()
                    .ok_or_else(|| UsageError("--config requires a path".into()))?;
                config = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = it
                    .next()
                    .ok_or_else(|| UsageError("--out requires a directory".into()))?;
                out = PathBuf::from(v);
            }
            "--set" => {
                let v = it
                    .next()
                    .ok_or_else(|| UsageError("--set requires key=value".into()))?;
                let (k, val) = v
                    .split_once('=')
                    .ok_or_else(|| UsageError(format!("--set expects key=value, got `{v}`")))?;
                overrides.push((k.trim().to_string(), val.trim().to_string()));
            }
            s if s.starts_with('-') => {
                return Err(UsageError(format!("unknown flag `{s}`")));
            }
            s => {
                if sub.is_some() {
                    return Err(UsageError(format!("unexpected argument `{s}`")));
                }
                sub = Some(
                    Subcommand::from_str(s)
                        .ok_or_else(|| UsageError(format!("unknown subcommand `{s}`")))?,
                );
            }
        }
    }
    let sub = sub.ok_or_else(|| UsageError("missing subcommand (try --help)".into()))?;
    Ok(Parsed::Run(Command {
        sub,
        config,
        out,
        overrides,
    }))
}

pub fn help_text() -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "\
splashguard - vortex-sheet splash diagnostics

USAGE:
    splashguard <SUBCOMMAND> [--config PATH] [--out DIR] [--set KEY=VALUE]...

SUBCOMMANDS:
    simulate          step a scenario and record the monitor trace
    detect-splash     locate a near-touch pair and build its splash frame
    verify-bound      run the d|log d| envelope sweep and slope checks
    recover-gradient  recover interfacial velocity gradients on test data
    certify           check a recorded separation trace against the closure
    selftest          run the built-in sanity suite

FLAGS:
    --config PATH     flat `key = value` configuration file
    --out DIR         output directory (default: out)
    --set KEY=VALUE   override a configuration value (repeatable)
    --help, -h        print this help

ENVIRONMENT:
    SPLASHGUARD_THREADS   cap the size of the worker thread pool

EXIT CODES:
    0 success, 1 error, 2 check failed

CONFIGURATION KEYS (flat `key = value`, `#` starts a comment):
  simulate:
    scenario.name        run label recorded in the trace   (default: run)
    scenario.kind        flat | splash | approach          (default: flat)
    grid.n               interface sample count            (default: 1024)
    run.dt               step size                         (default: 0.01)
    run.steps            step count                        (default: 10)
    run.normalization    unscaled | standard               (default: unscaled)
    sheet.omega          constant sheet vorticity          (default: 1)
    splash.d0            pinch gap of the splash family    (default: 0.001)
    splash.a             parabolic curvature of the family (default: 1)
    bulk.kind            none | rankine | bump             (default: none)
    bulk.cx, bulk.cy     bulk patch center                 (default: 0, -2)
    bulk.radius          bulk patch radius                 (default: 0.5)
    bulk.omega0          bulk patch amplitude              (default: 1)
    bulk.h               bulk quadrature cell size         (default: 0.02)
    monitor.p            exponent of the recorded L^p      (default: 2)
    params.rho_e         inviscid density                  (default: 1)
    params.rho_ns        viscous density                   (default: 1)
    params.nu_ns         viscosity                         (default: 1)
    params.g             gravity                           (default: 1)
    params.sigma         surface tension                   (default: 0)
    params.a_const       admissibility constant            (default: 10)
    params.horizon       run horizon                       (default: 1)
    guards.ca_floor      step-rejection chord-arc floor    (default: 1e-6)
    guards.min_tangent   step-rejection tangent floor      (default: 0.1)
  detect-splash:
    curve.path           read the curve from a file instead of the family
    grid.n, splash.d0, splash.a   family parameters as above
    splash.eps1          pair separation scale             (default: 0.1)
    splash.eps2          chord-arc detection threshold     (default: 0.05)
    splash.eps4          certificate chord-arc floor       (default: 0.05)
    splash.eps5          frame localization scale          (default: 0.2)
    frame.rho_max        frame window half-width           (default: 0.15)
    frame.n_rho          frame window sample count         (default: 65)
    detect.tol           invariant-residual tolerance      (default: 1e-6)
  verify-bound:
    sweep.d_max          largest separation                (default: 0.1)
    sweep.count          number of separations             (default: 9)
    sweep.decade_step    log10 spacing                     (default: 0.5)
    sweep.a              frame graph curvature             (default: 1)
    sweep.rho_max        frame window half-width           (default: 0.4)
    sweep.c_near         near-disk radius factor           (default: 0.25)
    sweep.curve_n        sheet-difference curve resolution (default: 4096)
    check.slope_floor    minimum admissible ratio slope    (default: -0.05)
    check.near_factor    near-part spread factor           (default: 3)
  recover-gradient:
    recover.case         shear | quadratic | principal     (default: principal)
    recover.n            sample count                      (default: 256)
    recover.nu           viscosity of the recovery data    (default: 1)
    recover.tol          residual tolerance                (default: 1e-6)
  certify:
    certify.input        CSV of `t, dtilde` rows (required)
    certify.c            growth constant (default: fitted from the trace)
    certify.c_headroom   factor applied to the fitted c    (default: 1.01)
    certify.eps4         chord-arc floor                   (default: 0.05)
    certify.k            discrete-inequality slack factor  (default: 1.05)
"
    );
    s
}

/// Flat dotted-key configuration with per-key provenance for diagnostics.
#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
    provenance: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.split_once('#') {
                Some((before, _)) => before,
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                format!(
                    "{}:{}: expected `key = value`, got `{}`",
                    path.display(),
                    lineno + 1,
                    line
                )
            })?;
            cfg.values
                .insert(k.trim().to_string(), v.trim().to_string());
            cfg.provenance.insert(
                k.trim().to_string(),
                format!("{}:{}", path.display(), lineno + 1),
            );
        }
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) {
        for (k, v) in overrides {
            self.values.insert(k.clone(), v.clone());
            self.provenance.insert(k.clone(), "--set".into());
        }
    }

    fn source(&self, key: &str) -> String {
        self.provenance
            .get(key)
            .cloned()
            .unwrap_or_else(|| "default".into())
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.values
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    pub fn get_opt(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, String> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| format!("{}: key `{key}` is not a number: `{v}`", self.source(key))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, String> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                format!("{}: key `{key}` is not an integer: `{v}`", self.source(key))
            }),
        }
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("SPLASHGUARD_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                // Ignore the error if a global pool already exists.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), String> {
    let s = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, s).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Check outcome of a subcommand body: `Ok(true)` passed, `Ok(false)` a
/// requested check failed (exit 2), `Err` is an error (exit 1).
type CheckResult = Result<bool, String>;

pub fn execute(cmd: &Command) -> i32 {
    init_threads();
    if let Err(e) = std::fs::create_dir_all(&cmd.out) {
        eprintln!("error: cannot create output directory {}: {e}", cmd.out.display());
        return EXIT_ERROR;
    }
    let mut cfg = match &cmd.config {
        Some(p) => match Config::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        },
        None => Config::default(),
    };
    cfg.apply_overrides(&cmd.overrides);

    let result = match cmd.sub {
        Subcommand::Simulate => cmd_simulate(&cfg, &cmd.out),
        Subcommand::DetectSplash => cmd_detect_splash(&cfg, &cmd.out),
        Subcommand::VerifyBound => cmd_verify_bound(&cfg, &cmd.out),
        Subcommand::RecoverGradient => cmd_recover_gradient(&cfg, &cmd.out),
        Subcommand::Certify => cmd_certify(&cfg, &cmd.out),
        Subcommand::Selftest => cmd_selftest(),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn fluid_params(cfg: &Config) -> Result<FluidParams, String> {
    let d = FluidParams::default();
    Ok(FluidParams {
        rho_e: cfg.get_f64("params.rho_e", d.rho_e)?,
        rho_ns: cfg.get_f64("params.rho_ns", d.rho_ns)?,
        nu_ns: cfg.get_f64("params.nu_ns", d.nu_ns)?,
        g: cfg.get_f64("params.g", d.g)?,
        sigma: cfg.get_f64("params.sigma", d.sigma)?,
        a_const: cfg.get_f64("params.a_const", d.a_const)?,
        horizon: cfg.get_f64("params.horizon", d.horizon)?,
    })
}

fn splash_config(cfg: &Config) -> Result<SplashConfig, String> {
    let d = SplashConfig::default();
    Ok(SplashConfig {
        eps1: cfg.get_f64("splash.eps1", d.eps1)?,
        eps2: cfg.get_f64("splash.eps2", d.eps2)?,
        eps4: cfg.get_f64("splash.eps4", d.eps4)?,
        eps5: cfg.get_f64("splash.eps5", d.eps5)?,
    })
}

fn bulk_from_config(cfg: &Config) -> Result<Option<BulkVorticity>, String> {
    let kind = cfg.get_str("bulk.kind", "none");
    if kind == "none" {
        return Ok(None);
    }
    let cx = cfg.get_f64("bulk.cx", 0.0)?;
    let cy = cfg.get_f64("bulk.cy", -2.0)?;
    let radius = cfg.get_f64("bulk.radius", 0.5)?;
    let omega0 = cfg.get_f64("bulk.omega0", 1.0)?;
    let h = cfg.get_f64("bulk.h", 0.02)?;
    if radius <= 0.0 || h <= 0.0 {
        return Err("bulk.radius and bulk.h must be positive".into());
    }
    let center = Vec2::new(cx, cy);
    let margin = 1.05 * radius;
    let window = GridWindow::covering(
        cx - margin,
        cy - margin,
        2.0 * margin,
        2.0 * margin,
        h,
    );
    let field: Arc<dyn splashguard_core::kernels::ScalarField> = match kind.as_str() {
        "rankine" => Arc::new(RankineDisc {
            center,
            radius,
            omega0,
        }),
        "bump" => Arc::new(SmoothBump {
            center,
            radius,
            amplitude: omega0,
        }),
        other => return Err(format!("unknown bulk.kind `{other}` (none | rankine | bump)")),
    };
    Ok(Some(BulkVorticity::analytic(field, window)))
}

fn normalization(cfg: &Config) -> Result<BulkNormalization, String> {
    match cfg.get_str("run.normalization", "unscaled").as_str() {
        "unscaled" => Ok(BulkNormalization::Unscaled),
        "standard" => Ok(BulkNormalization::Standard),
        other => Err(format!(
            "unknown run.normalization `{other}` (unscaled | standard)"
        )),
    }
}

fn cmd_simulate(cfg: &Config, out: &Path) -> CheckResult {
    let name = cfg.get_str("scenario.name", "run");
    let kind = cfg.get_str("scenario.kind", "flat");
    let n = cfg.get_usize("grid.n", 1024)?;
    let dt = cfg.get_f64("run.dt", 0.01)?;
    let steps = cfg.get_usize("run.steps", 10)?;
    let omega0 = cfg.get_f64("sheet.omega", 1.0)?;
    let d0 = cfg.get_f64("splash.d0", 1e-3)?;
    let a = cfg.get_f64("splash.a", 1.0)?;
    if dt <= 0.0 {
        return Err("run.dt must be positive".into());
    }

    let (initial_curve, motion) = match kind.as_str() {
        "flat" => (PeriodicCurve::flat(n), Motion::Kinematic),
        "splash" => {
            let fam = splash_curve(&SplashCurveParams {
                d: d0,
                a,
                n,
                ..Default::default()
            })
            .map_err(|e| e.to_string())?;
            (fam.curve, Motion::Kinematic)
        }
        "approach" => {
            let motion = prescribed_approach(n, d0);
            let curve = match &motion {
                Motion::Prescribed(f) => f(0.0),
                Motion::Kinematic => unreachable!(),
            };
            (curve, motion)
        }
        other => {
            return Err(format!(
                "unknown scenario.kind `{other}` (flat | splash | approach)"
            ))
        }
    };
    let omega = vec![omega0; n];
    let initial = SheetState::new(initial_curve, omega, 0.0).map_err(|e| e.to_string())?;

    let scenario = Scenario {
        name: name.clone(),
        initial,
        bulk: bulk_from_config(cfg)?,
        params: fluid_params(cfg)?,
        cfg: splash_config(cfg)?,
        normalization: normalization(cfg)?,
        motion,
        dt,
        steps,
        p_monitor: cfg.get_f64("monitor.p", 2.0)?,
        guards: StepGuards {
            ca_floor: cfg.get_f64("guards.ca_floor", 1e-6)?,
            min_tangent: cfg.get_f64("guards.min_tangent", 0.1)?,
        },
    };
    let trace = run_scenario(&scenario).map_err(|e| e.to_string())?;
    trace
        .write_monitor_csv(&out.join("monitor.csv"))
        .map_err(|e| e.to_string())?;
    trace
        .write_json_summary(&out.join("summary.json"))
        .map_err(|e| e.to_string())?;
    if let Some(reason) = &trace.aborted {
        eprintln!("check failed: run aborted: {reason}");
        return Ok(false);
    }
    println!(
        "simulate `{name}`: {} steps recorded, final CA = {:e}",
        trace.rows.len() - 1,
        trace.rows.last().map(|r| r.ca).unwrap_or(f64::NAN)
    );
    Ok(true)
}

fn cmd_detect_splash(cfg: &Config, out: &Path) -> CheckResult {
    let scfg = splash_config(cfg)?;
    let curve = match cfg.get_opt("curve.path") {
        Some(p) => PeriodicCurve::read_from(Path::new(p)).map_err(|e| e.to_string())?,
        None => {
            let n = cfg.get_usize("grid.n", 2048)?;
            let d0 = cfg.get_f64("splash.d0", 1e-3)?;
            let a = cfg.get_f64("splash.a", 1.0)?;
            splash_curve(&SplashCurveParams {
                d: d0,
                a,
                n,
                ..Default::default()
            })
            .map_err(|e| e.to_string())?
            .curve
        }
    };
    let rho_max = cfg.get_f64("frame.rho_max", 0.15)?;
    let n_rho = cfg.get_usize("frame.n_rho", 65)?;
    let tol = cfg.get_f64("detect.tol", 1e-6)?;

    let (a1, a2, d) = match find_closest_pair(&curve, &scfg) {
        Ok(t) => t,
        Err(splashguard_core::Error::NoSplashCandidate { ca, threshold }) => {
            let report = serde_json::json!({
                "candidate": false,
                "ca": ca,
                "threshold": threshold,
            });
            write_json(&out.join("detect.json"), &report)?;
            eprintln!("check failed: no splash candidate (CA {ca:e} > threshold {threshold:e})");
            return Ok(false);
        }
        Err(e) => return Err(e.to_string()),
    };
    let conditions = verify_pair_conditions(&curve, a1, a2);
    let frame = build_splash_frame(&curve, a1, a2, &scfg, rho_max, n_rho)
        .map_err(|e| e.to_string())?;
    let invariants = check_frame_invariants(&curve, &frame);

    let frame_report = frame.to_report();
    std::fs::write(
        out.join("frame.json"),
        serde_json::to_string_pretty(&frame_report).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;

    let geometry_ok = conditions.tangents_opposed && conditions.segment_clear;
    let invariants_ok = invariants.endpoint_residual <= tol
        && invariants.f1_center_residual <= tol
        && invariants.f2_center_residual <= tol
        && invariants.min_gap_excess >= -tol
        && invariants.max_beta_slope_product < 0.0;
    let report = serde_json::json!({
        "candidate": true,
        "alpha1": a1,
        "alpha2": a2,
        "d": d,
        "ca": chord_arc_min(&curve).ca_value,
        "conditions": serde_json::to_value(&conditions).map_err(|e| e.to_string())?,
        "invariants": serde_json::to_value(&invariants).map_err(|e| e.to_string())?,
        "geometry_ok": geometry_ok,
        "invariants_ok": invariants_ok,
    });
    write_json(&out.join("detect.json"), &report)?;
    if !(geometry_ok && invariants_ok) {
        eprintln!("check failed: splash pair found but side conditions violated");
        return Ok(false);
    }
    println!("detect-splash: pair at ({a1:.6}, {a2:.6}), separation {d:e}");
    Ok(true)
}

fn cmd_verify_bound(cfg: &Config, out: &Path) -> CheckResult {
    let dflt = SweepConfig::default();
    let d_max = cfg.get_f64("sweep.d_max", 0.1)?;
    let count = cfg.get_usize("sweep.count", dflt.d_values.len())?;
    let step = cfg.get_f64("sweep.decade_step", 0.5)?;
    if d_max <= 0.0 || count == 0 || step <= 0.0 {
        return Err("sweep.d_max, sweep.count, and sweep.decade_step must be positive".into());
    }
    let d_values = (0..count)
        .map(|k| d_max * 10f64.powf(-step * k as f64))
        .collect();
    let sweep = SweepConfig {
        d_values,
        a: cfg.get_f64("sweep.a", dflt.a)?,
        rho_max: cfg.get_f64("sweep.rho_max", dflt.rho_max)?,
        c_near: cfg.get_f64("sweep.c_near", dflt.c_near)?,
        curve_n: cfg.get_usize("sweep.curve_n", dflt.curve_n)?,
    };
    let slope_floor = cfg.get_f64("check.slope_floor", -0.05)?;
    let near_factor = cfg.get_f64("check.near_factor", 3.0)?;

    let report = envelope_sweep(&sweep).map_err(|e| e.to_string())?;
    report
        .write_csv(&out.join("bound_report.csv"))
        .map_err(|e| e.to_string())?;
    report
        .write_json_summary(&out.join("bound_summary.json"))
        .map_err(|e| e.to_string())?;

    let slopes_ok = report.slope_v >= slope_floor && report.slope_w >= slope_floor;
    let mut near = report
        .rows
        .iter()
        .map(|r| r.near_over_d.abs())
        .collect::<Vec<_>>();
    near.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = near[near.len() / 2];
    let near_ok = median > 0.0
        && report
            .rows
            .iter()
            .all(|r| {
                let q = r.near_over_d.abs() / median;
                (1.0 / near_factor..=near_factor).contains(&q)
            });
    println!(
        "verify-bound: slope_v = {:+.4}, slope_w = {:+.4} (floor {slope_floor}), near spread ok = {near_ok}",
        report.slope_v, report.slope_w
    );
    if !(slopes_ok && near_ok) {
        eprintln!("check failed: envelope violated");
        return Ok(false);
    }
    Ok(true)
}

fn recovery_case(case: &str, n: usize, nu: f64) -> Result<InterfaceData, String> {
    let alphas: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    match case {
        "shear" => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            manufactured_data(
                &alphas,
                |a| Vec2::new(s * a, s * a),
                |_| Vec2::new(s, s),
                |_| Vec2::new(0.0, 0.0),
                |x| Vec2::new(x.y, 0.0),
                |_| Mat2::new(0.0, 1.0, 0.0, 0.0),
                |_| [Mat2::zeros(), Mat2::zeros()],
                nu,
            )
            .map_err(|e| e.to_string())
        }
        "quadratic" => manufactured_data(
            &alphas,
            |a| Vec2::new(0.0, 1.5 + 0.25 * a),
            |_| Vec2::new(0.0, 0.25),
            |_| Vec2::new(0.0, 0.0),
            |x| Vec2::new(x.x * x.y, -0.5 * x.y * x.y),
            |x| Mat2::new(x.y, x.x, 0.0, -x.y),
            |_| {
                [
                    Mat2::new(0.0, 1.0, 1.0, 0.0),
                    Mat2::new(0.0, 0.0, 0.0, -1.0),
                ]
            },
            nu,
        )
        .map_err(|e| e.to_string()),
        "principal" => {
            let step = 1.2 / n as f64;
            let (data, _) = quadratic_principal_interface_data(n, step, Vec2::new(0.6, 0.4), nu);
            Ok(data)
        }
        other => Err(format!(
            "unknown recover.case `{other}` (shear | quadratic | principal)"
        )),
    }
}

fn cmd_recover_gradient(cfg: &Config, out: &Path) -> CheckResult {
    let case = cfg.get_str("recover.case", "principal");
    let n = cfg.get_usize("recover.n", 256)?;
    let nu = cfg.get_f64("recover.nu", 1.0)?;
    let tol = cfg.get_f64("recover.tol", 1e-6)?;
    if n < 2 {
        return Err("recover.n must be at least 2".into());
    }
    let data = recovery_case(&case, n, nu)?;
    let rows = recover_all(&data).map_err(|e| e.to_string())?;
    write_recovery_csv(&rows, &out.join("recovery.csv")).map_err(|e| e.to_string())?;
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0f64, f64::max);
    let trace_max = rows
        .iter()
        .map(|r| (r.g[0][0] + r.g[1][1]).abs())
        .fold(0.0f64, f64::max);
    let pass = max_residual <= tol;
    let summary = serde_json::json!({
        "case": case,
        "n": n,
        "nu": nu,
        "max_residual": max_residual,
        "max_trace": trace_max,
        "tol": tol,
        "pass": pass,
    });
    write_json(&out.join("recovery_summary.json"), &summary)?;
    println!("recover-gradient `{case}`: max residual {max_residual:e} (tol {tol:e})");
    if !pass {
        eprintln!("check failed: recovery residual above tolerance");
        return Ok(false);
    }
    Ok(true)
}

fn read_trace_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read trace {}: {e}", path.display()))?;
    let mut t = Vec::new();
    let mut d = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() < 2 {
            return Err(format!(
                "{}:{}: expected two columns `t, dtilde`",
                path.display(),
                lineno + 1
            ));
        }
        match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                t.push(a);
                d.push(b);
            }
            _ if lineno == 0 => continue, // header row
            _ => {
                return Err(format!(
                    "{}:{}: non-numeric row `{line}`",
                    path.display(),
                    lineno + 1
                ))
            }
        }
    }
    if t.len() < 2 {
        return Err(format!("{}: need at least two rows", path.display()));
    }
    Ok((t, d))
}

fn cmd_certify(cfg: &Config, out: &Path) -> CheckResult {
    let input = cfg
        .get_opt("certify.input")
        .ok_or("certify requires certify.input (CSV of `t, dtilde` rows)")?
        .to_string();
    let eps4 = cfg.get_f64("certify.eps4", 0.05)?;
    let k = cfg.get_f64("certify.k", 1.05)?;
    let headroom = cfg.get_f64("certify.c_headroom", 1.01)?;
    let (t, d) = read_trace_csv(Path::new(&input))?;
    let c = match cfg.get_opt("certify.c") {
        Some(_) => cfg.get_f64("certify.c", 0.0)?,
        None => GronwallTrace::fit_c(&t, &d) * headroom,
    };
    let trace = GronwallTrace::from_series(t, d, c).map_err(|e| e.to_string())?;
    let report = splash_certificate(&trace, eps4, k);
    let pass = report.chain_holds && report.eq_dt_violations.is_empty();
    let mut value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    if let Some(obj) = value.as_object_mut() {
        obj.insert("c".into(), serde_json::json!(c));
        obj.insert("pass".into(), serde_json::json!(pass));
    }
    write_json(&out.join("certificate.json"), &value)?;
    println!(
        "certify: c = {c:e}, chain margin {:+e}, {} increment violation(s)",
        report.chain_margin,
        report.eq_dt_violations.len()
    );
    if !pass {
        eprintln!("check failed: trace violates the closure bound");
        return Ok(false);
    }
    Ok(true)
}

fn cmd_selftest() -> CheckResult {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("selftest {name}: {}", if ok { "ok" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // Flat sheet with unit vorticity moves at (1/2, 0).
    let ok = SheetState::new(PeriodicCurve::flat(256), vec![1.0; 256], 0.0)
        .ok()
        .and_then(|state| {
            splashguard_core::kernels::interface_velocity(
                &state,
                None,
                0.3,
                BulkNormalization::Unscaled,
            )
            .ok()
        })
        .map(|s| (s.value - Vec2::new(0.5, 0.0)).norm() < 1e-12)
        .unwrap_or(false);
    check("flat-sheet-velocity", ok);

    // Cosine vorticity on the flat sheet has the closed-form velocity
    // (0, sin(alpha)/2).
    let n = 256;
    let flat = PeriodicCurve::flat(n);
    let omega: Vec<f64> = (0..n)
        .map(|j| (splashguard_core::TWO_PI * j as f64 / n as f64).cos())
        .collect();
    let ok = birkhoff_rott(&flat, &omega, 0.7)
        .map(|u| (u - Vec2::new(0.0, 0.5 * 0.7f64.sin())).norm() < 1e-10)
        .unwrap_or(false);
    check("cosine-sheet-velocity", ok);

    // Log-growth integration against its closed form.
    let ok = splashguard_core::bounds::gronwall_integrate(10.0, 2.0, 0.5, 1e-4)
        .map(|g| (g.numeric - g.closed_form).abs() / g.closed_form < 1e-8)
        .unwrap_or(false);
    check("gronwall-closed-form", ok);

    // The synthetic family's pinch is found at its constructed separation.
    let ok = splash_curve(&SplashCurveParams {
        d: 1e-3,
        n: 1024,
        ..Default::default()
    })
    .ok()
    .and_then(|fam| find_closest_pair(&fam.curve, &SplashConfig::default()).ok())
    .map(|(_, _, d)| (d - 1e-3).abs() < 1e-5)
    .unwrap_or(false);
    check("pair-detection", ok);

    // Gradient recovery on a linear shear is exact.
    let ok = recovery_case("shear", 64, 1.0)
        .and_then(|data| recover_all(&data).map_err(|e| e.to_string()))
        .map(|rows| rows.iter().all(|r| r.residual < 1e-10))
        .unwrap_or(false);
    check("recovery-shear", ok);

    // A flat rest state is weakly admissible.
    let ok = SheetState::new(PeriodicCurve::flat(128), vec![0.0; 128], 0.0)
        .ok()
        .and_then(|state| {
            check_weak_admissibility(
                &state,
                None,
                &FluidParams::default(),
                BulkNormalization::Unscaled,
            )
            .ok()
        })
        .map(|r| r.weak_pass)
        .unwrap_or(false);
    check("admissibility-flat", ok);

    // An exactly-saturating trace passes its own certificate.
    let c = 0.8;
    let d0: f64 = 20.0;
    let t: Vec<f64> = (0..50).map(|i| 0.01 * i as f64).collect();
    let d: Vec<f64> = t.iter().map(|&ti| (d0.ln() * (c * ti).exp()).exp()).collect();
    let ok = GronwallTrace::from_series(t, d, c * 1.001)
        .map(|tr| {
            let rep = splash_certificate(&tr, 0.05, 1.05);
            rep.chain_holds && rep.eq_dt_violations.is_empty()
        })
        .unwrap_or(false);
    check("certificate-roundtrip", ok);

    Ok(failures == 0)
}

pub fn run(args: Vec<String>) -> i32 {
    match parse_args(&args) {
        Ok(Parsed::Help) => {
            print!("{}", help_text());
            EXIT_OK
        }
        Ok(Parsed::Run(cmd)) => execute(&cmd),
        Err(e) => {
            eprintln!("usage error: {e}");
            eprintln!("try `splashguard --help`");
            EXIT_ERROR
        }
    }
}
