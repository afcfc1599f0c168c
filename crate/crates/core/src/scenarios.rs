//! Scenario library: the synthetic splash-curve family, admissibility
//! checking, the kinematic time-stepper, and trace recording.
//!
//! The splash family models a flattened cavity of inviscid fluid inside the
//! viscous lower half-plane, vented to the upper half-plane through a single
//! off-center neck. The cavity ceiling and floor are exact parabolas
//! `y0 +- (d/2 + a x^2)` near `x = 0`, so the closest-approach geometry is
//! known in closed form; the pieces are joined by C^4 smoothstep blends away
//! from everything the diagnostics measure.

use crate::dynamics::{lp_monitor, FluidParams, SheetState};
use crate::error::{Error, Result};
use crate::geometry::{chord_arc_min, PeriodicCurve, Vec2, TWO_PI};
use crate::kernels::{interface_velocity, BulkNormalization, BulkVorticity};
use crate::spectral::TrigSeries;
use crate::splash::{refine_pair, SplashConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Geometry knobs of the synthetic splash family.
#[derive(Debug, Clone, Copy)]
pub struct SplashCurveParams {
    /// Gap between the cavity ceiling and floor at the pinch.
    pub d: f64,
    /// Parabolic curvature of the ceiling/floor.
    pub a: f64,
    /// Half-extent of the cavity (cap centers at +- r_c).
    pub r_c: f64,
    /// Neck wall abscissas (left, right); both positive keeps the neck off
    /// the pinch axis.
    pub neck: (f64, f64),
    /// Cavity centerline height (negative: inside the viscous half-plane).
    pub y0: f64,
    /// Blend half-width in the arc parameter.
    pub blend: f64,
    /// Sample count (power of two).
    pub n: usize,
}

impl Default for SplashCurveParams {
    fn default() -> Self {
        Self {
            d: 1e-3,
            a: 1.0,
            r_c: 0.65,
            neck: (0.25, 0.45),
            y0: -0.8,
            blend: 0.08,
            n: 4096,
        }
    }
}

/// A sampled splash curve together with the constructional pinch parameters.
#[derive(Debug, Clone)]
pub struct SplashCurveFamily {
    pub curve: PeriodicCurve,
    /// Parameter of the floor point of the pinch (lower branch).
    pub alpha_lower: f64,
    /// Parameter of the ceiling point of the pinch (upper branch).
    pub alpha_upper: f64,
    pub params: SplashCurveParams,
}

/// C-infinity smoothstep on [0, 1] (exponential partition of unity), so the
/// blended curve keeps spectral sample convergence.
fn smoothstep4(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

pub fn splash_curve(p: &SplashCurveParams) -> Result<SplashCurveFamily> {
    let pi = std::f64::consts::PI;
    let (xnl, xnr) = p.neck;
    if !(p.d > 0.0 && p.a > 0.0 && p.r_c > xnr && xnr > xnl && xnl > 0.0) {
        return Err(Error::Parse {
            what: "splash family".into(),
            detail: "need 0 < neck.0 < neck.1 < r_c and positive d, a".into(),
        });
    }
    let r = p.d / 2.0 + p.a * p.r_c * p.r_c;
    if p.y0 + r >= -0.05 || xnr - xnl <= p.d {
        return Err(Error::Parse {
            what: "splash family".into(),
            detail: "cavity must clear the flat interface and the neck must be wider than d".into(),
        });
    }
    let (d, a, r_c, y0) = (p.d, p.a, p.r_c, p.y0);
    let yc = move |x: f64| y0 + d / 2.0 + a * x * x;
    let yf = move |x: f64| y0 - d / 2.0 - a * x * x;

    type PieceFn = Box<dyn Fn(f64) -> Vec2>;
    let pieces: Vec<(f64, f64, PieceFn)> = vec![
        (-pi, xnl, Box::new(move |x| Vec2::new(x, 0.0))),
        (0.0, yc(xnl), Box::new(move |y| Vec2::new(xnl, y))),
        (xnl, -r_c, Box::new(move |x| Vec2::new(x, yc(x)))),
        (
            0.5 * pi,
            1.5 * pi,
            Box::new(move |th| Vec2::new(-r_c + r * th.cos(), y0 + r * th.sin())),
        ),
        (-r_c, r_c, Box::new(move |x| Vec2::new(x, yf(x)))),
        (
            -0.5 * pi,
            0.5 * pi,
            Box::new(move |th| Vec2::new(r_c + r * th.cos(), y0 + r * th.sin())),
        ),
        (r_c, xnr, Box::new(move |x| Vec2::new(x, yc(x)))),
        (yc(xnr), 0.0, Box::new(move |y| Vec2::new(xnr, y))),
        (xnr, pi, Box::new(move |x| Vec2::new(x, 0.0))),
    ];

    // Arc lengths by dense polylines; straight pieces come out exact, so the
    // two flat tails share a parameterization speed and the wrap joint needs
    // no blending.
    let mut lengths = Vec::with_capacity(pieces.len());
    for (g0, g1, f) in &pieces {
        let m = 256;
        let mut acc = 0.0;
        let mut prev = f(*g0);
        for k in 1..=m {
            let g = g0 + (g1 - g0) * k as f64 / m as f64;
            let q = f(g);
            acc += (q - prev).norm();
            prev = q;
        }
        lengths.push(acc);
    }
    let min_len = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_len <= 2.0 * p.blend {
        return Err(Error::Parse {
            what: "splash family".into(),
            detail: format!("blend width {} too large for shortest piece {min_len}", p.blend),
        });
    }
    let mut s_break = vec![0.0];
    for l in &lengths {
        s_break.push(s_break.last().unwrap() + l);
    }
    let total = *s_break.last().unwrap();

    let piece_z = |k: usize, s: f64| -> Vec2 {
        let (g0, g1, f) = &pieces[k];
        let g = g0 + (g1 - g0) * (s - s_break[k]) / lengths[k];
        f(g)
    };
    let w = p.blend;
    let z_of_s = |s: f64| -> Vec2 {
        let mut k = match s_break.binary_search_by(|b| b.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if k >= pieces.len() {
            k = pieces.len() - 1;
        }
        // Interior joints get smoothstep blends over |s - s_k| < w.
        if k >= 1 && s - s_break[k] < w {
            let u = (s - (s_break[k] - w)) / (2.0 * w);
            let t = smoothstep4(u);
            return piece_z(k - 1, s) * (1.0 - t) + piece_z(k, s) * t;
        }
        if k + 1 < pieces.len() && s_break[k + 1] - s < w {
            let u = (s - (s_break[k + 1] - w)) / (2.0 * w);
            let t = smoothstep4(u);
            return piece_z(k, s) * (1.0 - t) + piece_z(k + 1, s) * t;
        }
        piece_z(k, s)
    };

    let curve = PeriodicCurve::from_fn(p.n, |alpha| z_of_s(total * alpha / TWO_PI))?;
    let s_upper = s_break[2] + (0.0 - xnl) / (-r_c - xnl) * lengths[2];
    let s_lower = s_break[4] + (0.0 + r_c) / (2.0 * r_c) * lengths[4];
    Ok(SplashCurveFamily {
        curve,
        alpha_lower: TWO_PI * s_lower / total,
        alpha_upper: TWO_PI * s_upper / total,
        params: *p,
    })
}

/// One clause of the admissibility definition.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityClause {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// Closed-threshold convention: equality passes.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub clauses: Vec<AdmissibilityClause>,
    pub full_pass: bool,
    pub weak_pass: bool,
}

/// C^k sup-norm of the periodic offset: max over derivative orders 0..=k of
/// the grid sup.
fn offset_ck_norm(curve: &PeriodicCurve, k: u32) -> f64 {
    let n = curve.n_samples();
    let w1: Vec<f64> = (0..n).map(|j| curve.offset(j).x).collect();
    let w2: Vec<f64> = (0..n).map(|j| curve.offset(j).y).collect();
    let s1 = TrigSeries::from_samples(&w1);
    let s2 = TrigSeries::from_samples(&w2);
    let mut worst = 0.0f64;
    for order in 0..=k {
        for s in [&s1, &s2] {
            for v in s.derivative_samples(order) {
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

/// Clause-by-clause admissibility evaluation.
///
/// The bulk C^2 bound cannot be computed from a field descriptor alone; the
/// caller supplies it when known. Absent, the full check fails while the
/// weak check (which drops that clause) can still pass.
pub fn check_admissible(
    state: &SheetState,
    bulk: Option<&BulkVorticity>,
    bulk_c2_sup: Option<f64>,
    params: &FluidParams,
    norm: BulkNormalization,
) -> Result<AdmissibilityReport> {
    let a = params.a_const;
    let curve = &state.curve;
    let ca = chord_arc_min(curve).ca_value;

    let n = curve.n_samples();
    let sup_u = (0..n)
        .into_par_iter()
        .map(|j| interface_velocity(state, bulk, curve.alpha(j), norm).map(|s| s.value.norm()))
        .try_reduce(|| 0.0f64, |x, y| Ok(x.max(y)))?;

    let c4 = offset_ck_norm(curve, 4);
    let min_za = curve.min_z_alpha_norm();

    let mut clauses = vec![
        AdmissibilityClause {
            name: "chord_arc_lower".into(),
            value: ca,
            bound: 1.0 / a,
            pass: ca >= 1.0 / a,
        },
        AdmissibilityClause {
            name: "sup_interface_velocity".into(),
            value: sup_u,
            bound: a,
            pass: sup_u <= a,
        },
        AdmissibilityClause {
            name: "interface_c4_proximity".into(),
            value: c4,
            bound: a,
            pass: c4 <= a,
        },
        AdmissibilityClause {
            name: "min_tangent_norm".into(),
            value: min_za,
            bound: 1.0 / a,
            pass: min_za >= 1.0 / a,
        },
    ];
    let weak_pass = clauses.iter().all(|c| c.pass);
    clauses.push(AdmissibilityClause {
        name: "bulk_c2_bound".into(),
        value: bulk_c2_sup.unwrap_or(f64::NAN),
        bound: a,
        pass: bulk_c2_sup.map_or(false, |v| v <= a),
    });
    let full_pass = clauses.iter().all(|c| c.pass);
    Ok(AdmissibilityReport {
        clauses,
        full_pass,
        weak_pass,
    })
}

/// Interface velocity sampled on the whole grid (the RK4 stage evaluation).
pub fn velocity_samples(
    state: &SheetState,
    bulk: Option<&BulkVorticity>,
    norm: BulkNormalization,
) -> Result<Vec<Vec2>> {
    let n = state.curve.n_samples();
    (0..n)
        .into_par_iter()
        .map(|j| interface_velocity(state, bulk, state.curve.alpha(j), norm).map(|s| s.value))
        .collect()
}

/// Stability floors for the kinematic stepper.
#[derive(Debug, Clone, Copy)]
pub struct StepGuards {
    pub ca_floor: f64,
    pub min_tangent: f64,
}

impl Default for StepGuards {
    fn default() -> Self {
        Self {
            ca_floor: 1e-6,
            min_tangent: 0.1,
        }
    }
}

/// One explicit RK4 step of the full-velocity transport `z_t = u~` with the
/// sheet vorticity frozen.
///
/// The tangential motion is a gauge choice: only the normal component is
/// physically constrained, and transporting with the full velocity fixes the
/// parameterization drift.
pub fn step_kinematic(
    state: &SheetState,
    bulk: Option<&BulkVorticity>,
    dt: f64,
    norm: BulkNormalization,
    guards: &StepGuards,
) -> Result<SheetState> {
    let n = state.curve.n_samples();
    let offsets: Vec<Vec2> = (0..n).map(|j| state.curve.offset(j)).collect();

    let stage = |shift: &[Vec2], scale: f64| -> Result<Vec<Vec2>> {
        let trial: Vec<Vec2> = (0..n).map(|j| offsets[j] + shift[j] * scale).collect();
        let curve = PeriodicCurve::from_offsets(trial)?;
        let s = SheetState::new(curve, state.omega.clone(), state.t)?;
        velocity_samples(&s, bulk, norm)
    };

    let zeros = vec![Vec2::zeros(); n];
    let k1 = stage(&zeros, 0.0)?;
    let k2 = stage(&k1, 0.5 * dt)?;
    let k3 = stage(&k2, 0.5 * dt)?;
    let k4 = stage(&k3, dt)?;
    let new_offsets: Vec<Vec2> = (0..n)
        .map(|j| offsets[j] + (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (dt / 6.0))
        .collect();
    let curve = PeriodicCurve::from_offsets(new_offsets)?;
    if curve.min_z_alpha_norm() < guards.min_tangent {
        return Err(Error::StepRejected {
            t: state.t + dt,
            reason: format!("min |z_alpha| {} below floor {}", curve.min_z_alpha_norm(), guards.min_tangent),
        });
    }
    let ca = chord_arc_min(&curve).ca_value;
    if ca < guards.ca_floor {
        return Err(Error::StepRejected {
            t: state.t + dt,
            reason: format!("chord-arc {ca} below floor {}", guards.ca_floor),
        });
    }
    SheetState::new(curve, state.omega.clone(), state.t + dt)
}

/// Interface motion law of a scenario.
#[derive(Clone)]
pub enum Motion {
    /// Transport by the computed interface velocity.
    Kinematic,
    /// Analytic curve family `t -> z(t, .)` (monitor-only runs).
    Prescribed(Arc<dyn Fn(f64) -> PeriodicCurve + Send + Sync>),
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub initial: SheetState,
    pub bulk: Option<BulkVorticity>,
    pub params: FluidParams,
    pub cfg: SplashConfig,
    pub normalization: BulkNormalization,
    pub motion: Motion,
    pub dt: f64,
    pub steps: usize,
    /// Exponent of the recorded L^p monitor.
    pub p_monitor: f64,
    pub guards: StepGuards,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub i_p: f64,
    pub ca: f64,
    pub sup_omega: f64,
    /// Separation of the tracked pair, once one exists.
    pub d_sep: Option<f64>,
    /// Inverse-square separation of the tracked pair.
    pub dtilde: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub scenario: String,
    pub rows: Vec<TraceRow>,
    /// Populated when the run ended early on a rejected step.
    pub aborted: Option<String>,
    /// Last tracked pair.
    pub pair: Option<(f64, f64)>,
}

impl RunTrace {
    /// Monitor series in the stable four-column schema.
    pub fn write_monitor_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t, I_p, CA, sup_omega")?;
        for row in &self.rows {
            writeln!(f, "{:e}, {:e}, {:e}, {:e}", row.t, row.i_p, row.ca, row.sup_omega)?;
        }
        Ok(())
    }

    pub fn write_json_summary(&self, path: &std::path::Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| Error::Parse {
            what: "trace summary".into(),
            detail: e.to_string(),
        })?;
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn dtilde_series(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.dtilde.map(|v| (r.t, v)))
            .collect()
    }
}

/// Step a scenario, recording monitors each step; aborts cleanly with a
/// partial trace on a rejected step. A splash pair is tracked (and warm-
/// started) once the chord-arc value crosses the detection threshold.
pub fn run(scenario: &Scenario) -> Result<RunTrace> {
    let mut state = scenario.initial.clone();
    let mut rows = Vec::with_capacity(scenario.steps + 1);
    let mut pair: Option<(f64, f64)> = None;
    let mut aborted = None;

    for step in 0..=scenario.steps {
        let ca = chord_arc_min(&state.curve).ca_value;
        if ca <= scenario.cfg.eps2 {
            pair = Some(match pair {
                Some((a, b)) => {
                    let (a, b, _) = refine_pair(&state.curve, a, b);
                    (a, b)
                }
                None => {
                    let (a, b, _) = crate::splash::find_closest_pair(&state.curve, &scenario.cfg)?;
                    (a, b)
                }
            });
        }
        let (d_sep, dtilde) = match pair {
            Some((a, b)) => {
                let d = state.curve.periodic_chord(a, b).0.norm();
                (Some(d), Some(1.0 / (d * d)))
            }
            None => (None, None),
        };
        let i_p = lp_monitor(&state, scenario.p_monitor).unwrap_or(f64::NAN);
        rows.push(TraceRow {
            t: state.t,
            i_p,
            ca,
            sup_omega: state.sup_omega(),
            d_sep,
            dtilde,
        });
        if step == scenario.steps {
            break;
        }
        match &scenario.motion {
            Motion::Kinematic => {
                match step_kinematic(
                    &state,
                    scenario.bulk.as_ref(),
                    scenario.dt,
                    scenario.normalization,
                    &scenario.guards,
                ) {
                    Ok(next) => state = next,
                    Err(Error::StepRejected { t, reason }) => {
                        aborted = Some(format!("step rejected at t = {t}: {reason}"));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            Motion::Prescribed(f) => {
                let t = state.t + scenario.dt;
                state = SheetState::new(f(t), state.omega.clone(), t)?;
            }
        }
    }

    Ok(RunTrace {
        scenario: scenario.name.clone(),
        rows,
        aborted,
        pair,
    })
}

/// Analytic approach family: the splash curve with pinch gap `d0 exp(-t)`
/// in closed form.
pub fn prescribed_approach(n: usize, d0: f64) -> Motion {
    Motion::Prescribed(Arc::new(move |t: f64| {
        let p = SplashCurveParams {
            d: d0 * (-t).exp(),
            n,
            ..Default::default()
        };
        splash_curve(&p).expect("valid family parameters").curve
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::normal;
    use approx::assert_abs_diff_eq;

    #[test]
    fn family_pinch_geometry_is_exact() {
        let p = SplashCurveParams {
            n: 2048,
            ..Default::default()
        };
        let fam = splash_curve(&p).unwrap();
        let zl = fam.curve.eval(fam.alpha_lower);
        let zu = fam.curve.eval(fam.alpha_upper);
        assert_abs_diff_eq!(zl.x, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(zu.x, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!((zu - zl).norm(), p.d, epsilon = 1e-8);
        // Opposing horizontal tangents at the pinch.
        let tl = fam.curve.eval_z_alpha(fam.alpha_lower);
        let tu = fam.curve.eval_z_alpha(fam.alpha_upper);
        assert!(tl.dot(&tu) < 0.0);
        assert_abs_diff_eq!(tl.y / tl.norm(), 0.0, epsilon = 1e-5);
        assert_abs_diff_eq!(tu.y / tu.norm(), 0.0, epsilon = 1e-5);
        // Viscous side below the flat tails.
        let n_tail = normal(&fam.curve, 0.0);
        assert!(n_tail.y < -0.9 * n_tail.norm());
        assert!(fam.curve.min_z_alpha_norm() > 0.2);
    }

    #[test]
    fn family_rejects_bad_parameters() {
        let p = SplashCurveParams {
            blend: 2.0,
            ..Default::default()
        };
        assert!(splash_curve(&p).is_err());
        let p = SplashCurveParams {
            neck: (0.45, 0.25),
            ..Default::default()
        };
        assert!(splash_curve(&p).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let params = FluidParams::default();
        let flat = SheetState::new(PeriodicCurve::flat(64), vec![0.0; 64], 0.0).unwrap();
        let rep = check_admissible(&flat, None, Some(0.0), &params, BulkNormalization::Unscaled).unwrap();
        assert!(rep.full_pass && rep.weak_pass);

        // Amplitude-5 interface against A = 1 fails the proximity clause.
        let tight = FluidParams {
            a_const: 1.0,
            ..params
        };
        let big = SheetState::new(
            PeriodicCurve::from_fn(64, |a| Vec2::new(a, 5.0 * a.cos())).unwrap(),
            vec![0.0; 64],
            0.0,
        )
        .unwrap();
        let rep = check_admissible(&big, None, Some(0.0), &tight, BulkNormalization::Unscaled).unwrap();
        assert!(!rep.full_pass);
        assert!(rep
            .clauses
            .iter()
            .any(|c| c.name == "interface_c4_proximity" && !c.pass));

        // Unavailable bulk bound: weak passes, full does not.
        let rep = check_admissible(&flat, None, None, &params, BulkNormalization::Unscaled).unwrap();
        assert!(rep.weak_pass && !rep.full_pass);
    }

    #[test]
    fn zero_vorticity_state_is_fixed() {
        let state = SheetState::new(
            PeriodicCurve::from_fn(64, |a| Vec2::new(a, 0.1 * a.cos())).unwrap(),
            vec![0.0; 64],
            0.0,
        )
        .unwrap();
        let next = step_kinematic(&state, None, 0.1, BulkNormalization::Unscaled, &StepGuards::default()).unwrap();
        for j in 0..64 {
            assert_abs_diff_eq!((next.curve.offset(j) - state.curve.offset(j)).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn flat_sheet_translates_at_half_strength() {
        let c = 0.8;
        let n = 128;
        let dt = 0.05;
        let state = SheetState::new(PeriodicCurve::flat(n), vec![c; n], 0.0).unwrap();
        let next = step_kinematic(&state, None, dt, BulkNormalization::Unscaled, &StepGuards::default()).unwrap();
        for j in 0..n {
            let shift = next.curve.offset(j) - state.curve.offset(j);
            assert_abs_diff_eq!(shift.x, 0.5 * c * dt, epsilon = 1e-10);
            assert_abs_diff_eq!(shift.y, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rk4_order_on_smooth_scenario() {
        let n = 128;
        let curve = PeriodicCurve::from_fn(n, |a| Vec2::new(a, 0.1 * a.cos())).unwrap();
        let omega: Vec<f64> = (0..n).map(|j| (TWO_PI * j as f64 / n as f64).cos()).collect();
        let state = SheetState::new(curve, omega, 0.0).unwrap();
        let guards = StepGuards::default();
        let advance = |dt: f64, steps: usize| -> SheetState {
            let mut s = state.clone();
            for _ in 0..steps {
                s = step_kinematic(&s, None, dt, BulkNormalization::Unscaled, &guards).unwrap();
            }
            s
        };
        let reference = advance(0.2 / 16.0, 16);
        let err = |s: &SheetState| -> f64 {
            (0..n)
                .map(|j| (s.curve.offset(j) - reference.curve.offset(j)).norm())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(&advance(0.2, 1));
        let e2 = err(&advance(0.1, 2));
        let ratio = e1 / e2;
        assert!(ratio > 10.0, "RK4 halving ratio {ratio}");
    }

    #[test]
    fn zero_dynamics_run_is_constant() {
        let n = 64;
        let state = SheetState::new(PeriodicCurve::flat(n), vec![0.0; n], 0.0).unwrap();
        let scenario = Scenario {
            name: "rest".into(),
            initial: state,
            bulk: None,
            params: FluidParams::default(),
            cfg: SplashConfig::default(),
            normalization: BulkNormalization::Unscaled,
            motion: Motion::Kinematic,
            dt: 0.01,
            steps: 20,
            p_monitor: 2.0,
            guards: StepGuards::default(),
        };
        let trace = run(&scenario).unwrap();
        assert_eq!(trace.rows.len(), 21);
        assert!(trace.aborted.is_none());
        for row in &trace.rows {
            assert_abs_diff_eq!(row.ca, 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(row.i_p, 0.0);
        }
    }

    #[test]
    fn prescribed_approach_tracks_inverse_square() {
        let n = 8192;
        let d0 = 1e-2;
        let motion = prescribed_approach(n, d0);
        let initial = match &motion {
            Motion::Prescribed(f) => SheetState::new(f(0.0), vec![0.0; n], 0.0).unwrap(),
            _ => unreachable!(),
        };
        let scenario = Scenario {
            name: "approach".into(),
            initial,
            bulk: None,
            params: FluidParams::default(),
            cfg: SplashConfig::default(),
            normalization: BulkNormalization::Unscaled,
            motion,
            dt: 0.2,
            steps: 5,
            p_monitor: 2.0,
            guards: StepGuards::default(),
        };
        let trace = run(&scenario).unwrap();
        let series = trace.dtilde_series();
        assert_eq!(series.len(), 6);
        for (t, dtilde) in series {
            let d = d0 * (-t).exp();
            let expected = 1.0 / (d * d);
            assert!(
                (dtilde - expected).abs() <= 1e-8 * expected,
                "t={t}: {dtilde} vs {expected}"
            );
        }
    }

    #[test]
    fn runs_are_bit_identical() {
        let n = 64;
        let curve = PeriodicCurve::from_fn(n, |a| Vec2::new(a, 0.05 * a.cos())).unwrap();
        let omega: Vec<f64> = (0..n).map(|j| (TWO_PI * j as f64 / n as f64).sin().powi(2)).collect();
        let state = SheetState::new(curve, omega, 0.0).unwrap();
        let scenario = Scenario {
            name: "repeat".into(),
            initial: state,
            bulk: None,
            params: FluidParams::default(),
            cfg: SplashConfig::default(),
            normalization: BulkNormalization::Unscaled,
            motion: Motion::Kinematic,
            dt: 0.02,
            steps: 5,
            p_monitor: 2.0,
            guards: StepGuards::default(),
        };
        let t1 = run(&scenario).unwrap();
        let t2 = run(&scenario).unwrap();
        for (a, b) in t1.rows.iter().zip(&t2.rows) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.ca.to_bits(), b.ca.to_bits());
            assert_eq!(a.i_p.to_bits(), b.i_p.to_bits());
        }
    }
}
