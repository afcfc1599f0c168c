//! Velocity evaluation: periodized Birkhoff-Rott integral of the sheet
//! vorticity, the bulk Biot-Savart contribution of the viscous fluid, and the
//! three-term interface velocity representation.
//!
//! The sheet kernel is periodized analytically (cotangent closed form in the
//! e1 direction); truncating the image sum would destroy the principal-value
//! cancellation. On-grid targets use the alternating-point trapezoid rule,
//! off-grid targets a locally subtracted singularity.

use crate::dynamics::SheetState;
use crate::error::{Error, Result};
use crate::geometry::{perp, PeriodicCurve, RigidMap, Vec2, TWO_PI};
use crate::spectral::{periodic_diff, TrigSeries};
use num_complex::Complex;
use std::sync::Arc;

type C64 = Complex<f64>;

fn zeta(p: Vec2) -> C64 {
    C64::new(p.x, p.y)
}

/// Principal-value Birkhoff-Rott integral
/// `(2pi)^-1 pv int (z(a)-z(b))^perp / |z(a)-z(b)|^2 w(b) db`,
/// periodized over e1 images.
pub fn birkhoff_rott(curve: &PeriodicCurve, omega: &[f64], alpha: f64) -> Result<Vec2> {
    let n = curve.n_samples();
    if omega.len() != n {
        return Err(Error::SampleCountMismatch {
            expected: n,
            got: omega.len(),
        });
    }
    let h = TWO_PI / n as f64;
    let za = curve.eval(alpha);
    let zeta_a = zeta(za);

    // Snap to grid if the target lies on a node.
    let pos = alpha / h;
    let j_near = pos.round() as i64;
    let on_grid = (pos - j_near as f64).abs() < 1e-12;

    // Self-touching scan over every sampled node (not only the quadrature
    // nodes, which skip half the grid at on-grid targets).
    for k in 0..n {
        let beta = curve.alpha(k);
        let delta = periodic_diff(alpha, beta);
        if delta.abs() < 0.5 * h {
            continue;
        }
        let s = ((zeta_a - zeta(curve.point(k))) * 0.5).sin();
        if 2.0 * s.norm() < 1e-14 {
            return Err(Error::SingularTarget { dist: 2.0 * s.norm() });
        }
    }

    let mut acc = C64::new(0.0, 0.0);
    if on_grid {
        let j = j_near.rem_euclid(n as i64) as usize;
        // Alternating-point trapezoid: skip every other node, weight 2h.
        for k in 0..n {
            if (k + n - j) % 2 == 0 {
                continue;
            }
            let dz = zeta_a - zeta(curve.point(k));
            let half = dz * 0.5;
            let s = half.sin();
            acc += half.cos() / s * omega[k] * (2.0 * h);
        }
    } else {
        // Subtract the local singularity; the periodic Hilbert kernel
        // integrates to zero over a period.
        let omega_series = TrigSeries::from_samples(omega);
        let w_a = omega_series.eval(alpha);
        let dw_a = omega_series.eval_deriv(alpha, 1);
        let dzeta_a = zeta(curve.eval_z_alpha(alpha));
        let ddzeta_a = zeta(curve.eval_z_alpha_alpha(alpha));
        for k in 0..n {
            let beta = curve.alpha(k);
            let delta = periodic_diff(alpha, beta);
            let dz = zeta_a - zeta(curve.point(k));
            let half = dz * 0.5;
            let s = half.sin();
            if s.norm() < 5e-15 && delta.abs() > 0.5 * h {
                return Err(Error::SingularTarget { dist: 2.0 * s.norm() });
            }
            let term = if delta.abs() < 1e-8 {
                // Removable-singularity limit of the subtracted integrand.
                -2.0 * dw_a / dzeta_a + w_a * ddzeta_a / (dzeta_a * dzeta_a)
            } else {
                let cot_curve = half.cos() / s;
                let cot_flat = (0.5 * delta).cos() / (0.5 * delta).sin();
                cot_curve * omega[k] - cot_flat * w_a / dzeta_a
            };
            acc += term * h;
        }
    }
    // conj(u) = (1/(4 pi i)) * acc  =>  u = conj(acc) * conj(1/(4 pi i)).
    let u = (acc / C64::new(0.0, 4.0 * std::f64::consts::PI)).conj();
    Ok(Vec2::new(u.re, u.im))
}

/// Normalization convention for the bulk Biot-Savart integral.
///
/// `Unscaled` omits the 1/2pi prefactor (unlike the sheet kernel);
/// `Standard` restores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BulkNormalization {
    #[default]
    Unscaled,
    Standard,
}

impl BulkNormalization {
    fn factor(self) -> f64 {
        match self {
            BulkNormalization::Unscaled => 1.0,
            BulkNormalization::Standard => 1.0 / TWO_PI,
        }
    }
}

/// Named closed-form scalar field.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: Vec2) -> f64;
    fn name(&self) -> &str;
}

/// Constant-vorticity circular patch (Rankine vortex).
#[derive(Debug, Clone)]
pub struct RankineDisc {
    pub center: Vec2,
    pub radius: f64,
    pub omega0: f64,
}

impl ScalarField for RankineDisc {
    fn eval(&self, x: Vec2) -> f64 {
        if (x - self.center).norm() < self.radius {
            self.omega0
        } else {
            0.0
        }
    }
    fn name(&self) -> &str {
        "rankine_disc"
    }
}

/// Compactly supported C-infinity bump `A exp(1 - 1/(1 - r^2/R^2))`.
#[derive(Debug, Clone)]
pub struct SmoothBump {
    pub center: Vec2,
    pub radius: f64,
    pub amplitude: f64,
}

impl ScalarField for SmoothBump {
    fn eval(&self, x: Vec2) -> f64 {
        let r2 = (x - self.center).norm_squared() / (self.radius * self.radius);
        if r2 >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - r2)).exp()
        }
    }
    fn name(&self) -> &str {
        "smooth_bump"
    }
}

/// Region description backing a bulk-vorticity mask.
#[derive(Clone)]
pub enum Region {
    /// Mask supplied directly.
    Explicit,
    /// Viscous half-plane below the interface.
    HalfPlaneBelow { curve: PeriodicCurve },
    /// Strips between two graphs in splash-frame coordinates: the region
    /// below `f_low` or above `f_high` within the window (the two viscous
    /// lobes around a near-self-intersection).
    OutsideGraphs {
        map: RigidMap,
        rho: Vec<f64>,
        f_low: Vec<f64>,
        f_high: Vec<f64>,
    },
}

impl Region {
    pub fn contains(&self, x: Vec2) -> bool {
        match self {
            Region::Explicit => true,
            Region::HalfPlaneBelow { curve } => {
                // Compare against the interface height at the nearest sample
                // in the e1 direction (graph-like interfaces only).
                let n = curve.n_samples();
                let mut best = f64::INFINITY;
                let mut height = 0.0;
                for j in 0..n {
                    let p = curve.point(j);
                    let dx = periodic_diff(x.x, p.x);
                    if dx.abs() < best {
                        best = dx.abs();
                        height = p.y;
                    }
                }
                x.y < height
            }
            Region::OutsideGraphs {
                map,
                rho,
                f_low,
                f_high,
            } => {
                let y = map.inverse_apply(x);
                let lo = *rho.first().unwrap_or(&0.0);
                let hi = *rho.last().unwrap_or(&0.0);
                if y.x < lo || y.x > hi {
                    return false;
                }
                let fl = interp1(rho, f_low, y.x);
                let fh = interp1(rho, f_high, y.x);
                y.y < fl || y.y > fh
            }
        }
    }
}

pub(crate) fn interp1(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] * (1.0 - t) + ys[hi] * t
}

/// Uniform quadrature window: cells of size `h`, lower-left corner `(x0, y0)`.
#[derive(Debug, Clone, Copy)]
pub struct GridWindow {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
}

impl GridWindow {
    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.x0 + (i as f64 + 0.5) * self.h,
            self.y0 + (j as f64 + 0.5) * self.h,
        )
    }

    /// Window covering `[x0, x0+w] x [y0, y0+h]` with cell size at most `h_max`.
    pub fn covering(x0: f64, y0: f64, width: f64, height: f64, h_max: f64) -> Self {
        let nx = (width / h_max).ceil().max(1.0) as usize;
        let ny = (height / h_max).ceil().max(1.0) as usize;
        let h = (width / nx as f64).max(height / ny as f64);
        let nx = (width / h).round().max(1.0) as usize;
        let ny = (height / h).round().max(1.0) as usize;
        Self { h, nx, ny, x0, y0 }
    }
}

#[derive(Clone)]
enum BulkData {
    Analytic(Arc<dyn ScalarField>),
    Gridded { mask: Vec<bool>, values: Vec<f64> },
}

/// Prescribed bulk vorticity with its support description and quadrature rule.
#[derive(Clone)]
pub struct BulkVorticity {
    window: GridWindow,
    data: BulkData,
    region: Region,
}

impl BulkVorticity {
    pub fn analytic(field: Arc<dyn ScalarField>, window: GridWindow) -> Self {
        Self {
            window,
            data: BulkData::Analytic(field),
            region: Region::Explicit,
        }
    }

    pub fn analytic_in_region(
        field: Arc<dyn ScalarField>,
        window: GridWindow,
        region: Region,
    ) -> Self {
        Self {
            window,
            data: BulkData::Analytic(field),
            region,
        }
    }

    pub fn gridded(
        window: GridWindow,
        mask: Vec<bool>,
        values: Vec<f64>,
        region: Region,
    ) -> Result<Self> {
        let ncells = window.nx * window.ny;
        if mask.len() != ncells || values.len() != ncells {
            return Err(Error::SampleCountMismatch {
                expected: ncells,
                got: mask.len().min(values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                what: "bulk field".into(),
                detail: "non-finite sample".into(),
            });
        }
        // Point-in-region check for the declared mask.
        for j in 0..window.ny {
            for i in 0..window.nx {
                let idx = j * window.nx + i;
                if mask[idx] && !region.contains(window.cell_center(i, j)) {
                    return Err(Error::Parse {
                        what: "bulk field".into(),
                        detail: format!("masked cell ({i},{j}) outside declared region"),
                    });
                }
            }
        }
        Ok(Self {
            window,
            data: BulkData::Gridded { mask, values },
            region,
        })
    }

    pub fn window(&self) -> GridWindow {
        self.window
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Pointwise field value (zero outside the window / mask / region).
    pub fn eval(&self, x: Vec2) -> f64 {
        match &self.data {
            BulkData::Analytic(f) => {
                if self.region.contains(x) || matches!(self.region, Region::Explicit) {
                    f.eval(x)
                } else {
                    0.0
                }
            }
            BulkData::Gridded { mask, values } => {
                let w = &self.window;
                let i = ((x.x - w.x0) / w.h).floor();
                let j = ((x.y - w.y0) / w.h).floor();
                if i < 0.0 || j < 0.0 {
                    return 0.0;
                }
                let (i, j) = (i as usize, j as usize);
                if i >= w.nx || j >= w.ny {
                    return 0.0;
                }
                let idx = j * w.nx + i;
                if mask[idx] {
                    values[idx]
                } else {
                    0.0
                }
            }
        }
    }

    fn cell_value(&self, i: usize, j: usize) -> f64 {
        match &self.data {
            BulkData::Analytic(f) => {
                let c = self.window.cell_center(i, j);
                match &self.region {
                    Region::Explicit => f.eval(c),
                    r => {
                        if r.contains(c) {
                            f.eval(c)
                        } else {
                            0.0
                        }
                    }
                }
            }
            BulkData::Gridded { mask, values } => {
                let idx = j * self.window.nx + i;
                if mask[idx] {
                    values[idx]
                } else {
                    0.0
                }
            }
        }
    }

    fn has_active_cells(&self) -> bool {
        match &self.data {
            BulkData::Analytic(_) => self.window.nx * self.window.ny > 0,
            BulkData::Gridded { mask, .. } => mask.iter().any(|&m| m),
        }
    }

    /// `L^p` norm of the sampled field, `p` in {1, 2, inf}.
    pub fn lp_norm(&self, p: LpExponent) -> f64 {
        let w = &self.window;
        let cell_area = w.h * w.h;
        let mut acc: f64 = 0.0;
        for j in 0..w.ny {
            for i in 0..w.nx {
                let v = self.cell_value(i, j).abs();
                match p {
                    LpExponent::One => acc += v * cell_area,
                    LpExponent::Two => acc += v * v * cell_area,
                    LpExponent::Inf => acc = acc.max(v),
                }
            }
        }
        match p {
            LpExponent::Two => acc.sqrt(),
            _ => acc,
        }
    }

    /// Serialize a gridded field: header `h nx ny x0 y0`, then row-major
    /// `mask value` pairs.
    pub fn write_to(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let (mask, values) = match &self.data {
            BulkData::Gridded { mask, values } => (mask, values),
            BulkData::Analytic(_) => {
                return Err(Error::Parse {
                    what: "bulk field".into(),
                    detail: "only gridded fields serialize".into(),
                })
            }
        };
        let w = &self.window;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{:e} {} {} {:e} {:e}", w.h, w.nx, w.ny, w.x0, w.y0)?;
        for idx in 0..mask.len() {
            writeln!(f, "{} {:e}", mask[idx] as u8, values[idx])?;
        }
        Ok(())
    }

    pub fn read_from(path: &std::path::Path) -> Result<Self> {
        use std::io::BufRead;
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut lines = f.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse {
                what: "bulk field".into(),
                detail: "empty file".into(),
            })??;
        let cols: Vec<&str> = header.split_whitespace().collect();
        if cols.len() != 5 {
            return Err(Error::Parse {
                what: "bulk field".into(),
                detail: "header needs `h nx ny x0 y0`".into(),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                what: "bulk field".into(),
                detail: format!("bad float {s:?}"),
            })
        };
        let parse_u = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                what: "bulk field".into(),
                detail: format!("bad integer {s:?}"),
            })
        };
        let window = GridWindow {
            h: parse_f(cols[0])?,
            nx: parse_u(cols[1])?,
            ny: parse_u(cols[2])?,
            x0: parse_f(cols[3])?,
            y0: parse_f(cols[4])?,
        };
        let mut mask = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    what: "bulk field".into(),
                    detail: "rows are `mask value` pairs".into(),
                });
            }
            mask.push(cols[0] != "0");
            values.push(parse_f(cols[1])?);
        }
        Self::gridded(window, mask, values, Region::Explicit)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum LpExponent {
    One,
    Two,
    Inf,
}

/// Exact integral of the kernel `(x-y)^perp / |x-y|^2` against a constant
/// over an axis-aligned cell, split at the target when it lies inside.
fn exact_cell_kernel_integral(x: Vec2, lo: Vec2, hi: Vec2) -> Vec2 {
    // In shifted variables u = x1 - y1, v = x2 - y2 the cell maps to
    // [x1-hi.x, x1-lo.x] x [x2-hi.y, x2-lo.y] with unit Jacobian.
    let (u0, u1) = (x.x - hi.x, x.x - lo.x);
    let (v0, v1) = (x.y - hi.y, x.y - lo.y);
    let mut us = vec![u0];
    if u0 < 0.0 && u1 > 0.0 {
        us.push(0.0);
    }
    us.push(u1);
    let mut vs = vec![v0];
    if v0 < 0.0 && v1 > 0.0 {
        vs.push(0.0);
    }
    vs.push(v1);

    // Double antiderivatives of u/(u^2+v^2) and v/(u^2+v^2).
    fn anti_u(u: f64, v: f64) -> f64 {
        let mut acc = 0.0;
        if u != 0.0 {
            acc += u * (v / u).atan();
        }
        let r2 = u * u + v * v;
        if v != 0.0 && r2 > 0.0 {
            acc += 0.5 * v * r2.ln() - v;
        }
        acc
    }
    fn anti_v(u: f64, v: f64) -> f64 {
        anti_u(v, u)
    }

    let mut comp1 = 0.0; // integral of -v/(u^2+v^2)
    let mut comp2 = 0.0; // integral of  u/(u^2+v^2)
    for uw in us.windows(2) {
        for vw in vs.windows(2) {
            let (a0, a1) = (uw[0], uw[1]);
            let (b0, b1) = (vw[0], vw[1]);
            comp2 += anti_u(a1, b1) - anti_u(a0, b1) - anti_u(a1, b0) + anti_u(a0, b0);
            comp1 -= anti_v(a1, b1) - anti_v(a0, b1) - anti_v(a1, b0) + anti_v(a0, b0);
        }
    }
    Vec2::new(comp1, comp2)
}

/// Bulk Biot-Savart velocity `int K(x-y) w(y) dy` by masked midpoint
/// quadrature with exact-moment correction on cells near the target.
pub fn bulk_biot_savart(
    field: &BulkVorticity,
    x: Vec2,
    norm: BulkNormalization,
) -> Result<Vec2> {
    if !field.has_active_cells() {
        return Err(Error::QuadratureUnderflow);
    }
    let w = field.window();
    let h = w.h;
    let near2 = (2.0 * h) * (2.0 * h);
    let mut acc = Vec2::zeros();
    for j in 0..w.ny {
        for i in 0..w.nx {
            let value = field.cell_value(i, j);
            if value == 0.0 {
                continue;
            }
            let c = w.cell_center(i, j);
            let r = x - c;
            if r.norm_squared() > near2 {
                acc += perp(r) / r.norm_squared() * value * (h * h);
            } else {
                let lo = c - Vec2::new(0.5 * h, 0.5 * h);
                let hi = c + Vec2::new(0.5 * h, 0.5 * h);
                acc += exact_cell_kernel_integral(x, lo, hi) * value;
            }
        }
    }
    Ok(acc * norm.factor())
}

/// Velocity at a point with the three contributions stored separately.
#[derive(Debug, Clone)]
pub struct VelocitySample {
    pub alpha: f64,
    pub value: Vec2,
    pub sheet_local: Vec2,
    pub b_gamma: Vec2,
    pub b_ns: Vec2,
}

/// Interface velocity `u~ = w_G z_a / (2|z_a|^2) + B_G + B_NS`.
pub fn interface_velocity(
    state: &SheetState,
    bulk: Option<&BulkVorticity>,
    alpha: f64,
    norm: BulkNormalization,
) -> Result<VelocitySample> {
    let curve = &state.curve;
    let z_a = curve.eval_z_alpha(alpha);
    let omega_at = state.omega_at(alpha);
    let sheet_local = z_a * (omega_at / (2.0 * z_a.norm_squared()));
    let b_gamma = birkhoff_rott(curve, &state.omega, alpha)?;
    let b_ns = match bulk {
        Some(b) => bulk_biot_savart(b, curve.eval(alpha), norm)?,
        None => Vec2::zeros(),
    };
    Ok(VelocitySample {
        alpha,
        value: sheet_local + b_gamma + b_ns,
        sheet_local,
        b_gamma,
        b_ns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_sheet_constant_strength_vanishes() {
        let c = PeriodicCurve::flat(128);
        let omega = vec![3.7; 128];
        for &a in &[0.0, 1.0, 2.5] {
            let v = birkhoff_rott(&c, &omega, a).unwrap();
            assert_abs_diff_eq!(v.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_sheet_cosine_hilbert_identity() {
        // omega = cos(b) on the flat sheet gives (0, sin(a)/2).
        let n = 256;
        let c = PeriodicCurve::flat(n);
        let omega: Vec<f64> = (0..n).map(|j| (TWO_PI * j as f64 / n as f64).cos()).collect();
        for &a in &[0.0, 0.7, 2.0 * TWO_PI / n as f64] {
            let v = birkhoff_rott(&c, &omega, a).unwrap();
            assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-11);
            assert_abs_diff_eq!(v.y, 0.5 * a.sin(), epsilon = 1e-11);
        }
        // Off-grid target exercises the subtracted-singularity path.
        let a = 1.234567;
        let v = birkhoff_rott(&c, &omega, a).unwrap();
        assert_abs_diff_eq!(v.y, 0.5 * a.sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn spectral_convergence_on_cosine_case() {
        let err_at = |n: usize| -> f64 {
            let c = PeriodicCurve::flat(n);
            let omega: Vec<f64> =
                (0..n).map(|j| (TWO_PI * j as f64 / n as f64).cos()).collect();
            let mut worst: f64 = 0.0;
            for j in 0..n {
                let a = TWO_PI * j as f64 / n as f64;
                let v = birkhoff_rott(&c, &omega, a).unwrap();
                worst = worst.max((v.y - 0.5 * a.sin()).abs()).max(v.x.abs());
            }
            worst
        };
        // Perturbed curve so the error is not identically zero.
        let err_curved = |n: usize| -> f64 {
            let c = PeriodicCurve::from_fn(n, |a| Vec2::new(a, 0.1 * a.cos())).unwrap();
            let omega: Vec<f64> =
                (0..n).map(|j| (TWO_PI * j as f64 / n as f64).cos()).collect();
            let fine = PeriodicCurve::from_fn(1024, |a| Vec2::new(a, 0.1 * a.cos())).unwrap();
            let omega_fine: Vec<f64> =
                (0..1024).map(|j| (TWO_PI * j as f64 / 1024.0).cos()).collect();
            let mut worst: f64 = 0.0;
            for j in 0..8 {
                let a = TWO_PI * j as f64 / 8.0;
                let v = birkhoff_rott(&c, &omega, a).unwrap();
                let vf = birkhoff_rott(&fine, &omega_fine, a).unwrap();
                worst = worst.max((v - vf).norm());
            }
            worst
        };
        assert!(err_at(256) < 1e-10);
        let (e128, e256) = (err_curved(128), err_curved(256));
        assert!(
            e256 < e128 / 10.0 || e256 < 1e-13,
            "expected >=10x decay per doubling: {e128:e} -> {e256:e}"
        );
    }

    #[test]
    fn self_touching_curve_reports_singular_target() {
        // Two parameter values mapping to (numerically) the same point.
        let c = PeriodicCurve::from_fn(64, |a| {
            Vec2::new(a + 0.5 * std::f64::consts::PI * a.cos(), 0.0)
        })
        .unwrap();
        let omega = vec![1.0; 64];
        assert!(matches!(
            birkhoff_rott(&c, &omega, 0.0),
            Err(Error::SingularTarget { .. })
        ));
    }

    #[test]
    fn rankine_patch_center_and_exterior() {
        let a = 0.25;
        let field = BulkVorticity::analytic(
            Arc::new(RankineDisc {
                center: Vec2::zeros(),
                radius: a,
                omega0: 2.0,
            }),
            GridWindow::covering(-a, -a, 2.0 * a, 2.0 * a, a / 64.0),
        );
        let at_center = bulk_biot_savart(&field, Vec2::zeros(), BulkNormalization::Unscaled).unwrap();
        assert!(at_center.norm() < 1e-3);

        let r = 2.0 * a;
        let v = bulk_biot_savart(&field, Vec2::new(r, 0.0), BulkNormalization::Unscaled).unwrap();
        let expected = std::f64::consts::PI * 2.0 * a * a / r;
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 5e-3 * expected);
        assert!((v.y - expected).abs() < 5e-3 * expected, "{} vs {expected}", v.y);
        // Standard normalization differs by exactly 2pi.
        let vs = bulk_biot_savart(&field, Vec2::new(r, 0.0), BulkNormalization::Standard).unwrap();
        assert_abs_diff_eq!(vs.y * TWO_PI, v.y, epsilon = 1e-12);
    }

    #[test]
    fn richardson_second_order_on_smooth_field() {
        let bump = Arc::new(SmoothBump {
            center: Vec2::new(0.1, -0.2),
            radius: 0.5,
            amplitude: 1.0,
        });
        let x = Vec2::new(0.9, 0.4);
        let v_at = |h: f64| {
            let f = BulkVorticity::analytic(
                bump.clone(),
                GridWindow::covering(-0.4, -0.7, 1.0, 1.0, h),
            );
            bulk_biot_savart(&f, x, BulkNormalization::Unscaled).unwrap()
        };
        let reference = v_at(1.0 / 512.0);
        let e1 = (v_at(1.0 / 32.0) - reference).norm();
        let e2 = (v_at(1.0 / 64.0) - reference).norm();
        let ratio = e1 / e2;
        // At least second order; the midpoint rule is often better than
        // O(h^2) on smooth compactly supported integrands.
        assert!(ratio > 3.5, "O(h^2): ratio {ratio}");
    }

    #[test]
    fn empty_mask_underflows() {
        let w = GridWindow {
            h: 0.1,
            nx: 4,
            ny: 4,
            x0: 0.0,
            y0: 0.0,
        };
        let f = BulkVorticity::gridded(w, vec![false; 16], vec![0.0; 16], Region::Explicit).unwrap();
        assert!(matches!(
            bulk_biot_savart(&f, Vec2::zeros(), BulkNormalization::Unscaled),
            Err(Error::QuadratureUnderflow)
        ));
    }

    #[test]
    fn linearity_in_both_vorticities() {
        let n = 128;
        let c = PeriodicCurve::from_fn(n, |a| Vec2::new(a + 0.1 * a.sin(), 0.2 * a.cos())).unwrap();
        let w1: Vec<f64> = (0..n).map(|j| (TWO_PI * j as f64 / n as f64).cos()).collect();
        let w2: Vec<f64> = (0..n).map(|j| (2.0 * TWO_PI * j as f64 / n as f64).sin()).collect();
        let combo: Vec<f64> = (0..n).map(|j| 2.0 * w1[j] - 3.0 * w2[j]).collect();
        let a = 0.7;
        let va = birkhoff_rott(&c, &w1, a).unwrap();
        let vb = birkhoff_rott(&c, &w2, a).unwrap();
        let vc = birkhoff_rott(&c, &combo, a).unwrap();
        assert!((vc - (va * 2.0 - vb * 3.0)).norm() < 1e-12 * (1.0 + vc.norm()));
    }

    #[test]
    fn translation_invariance_of_sheet_kernel() {
        let n = 128;
        let c = PeriodicCurve::from_fn(n, |a| Vec2::new(a + 0.1 * a.sin(), 0.2 * a.cos())).unwrap();
        let shifted = c.translated(Vec2::new(0.3, -1.1));
        let omega: Vec<f64> = (0..n).map(|j| (TWO_PI * j as f64 / n as f64).cos()).collect();
        let a = 1.9;
        let v0 = birkhoff_rott(&c, &omega, a).unwrap();
        let v1 = birkhoff_rott(&shifted, &omega, a).unwrap();
        assert!((v0 - v1).norm() < 1e-12);
    }

    #[test]
    fn gridded_roundtrip() {
        let w = GridWindow {
            h: 0.25,
            nx: 3,
            ny: 2,
            x0: -1.0,
            y0: 0.5,
        };
        let mask = vec![true, false, true, true, true, false];
        let values = vec![1.0, 0.0, -2.5, 0.125, 3.0, 0.0];
        let f = BulkVorticity::gridded(w, mask.clone(), values.clone(), Region::Explicit).unwrap();
        let dir = std::env::temp_dir().join("splashguard_bulk_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bulk.txt");
        f.write_to(&path).unwrap();
        let g = BulkVorticity::read_from(&path).unwrap();
        for j in 0..w.ny {
            for i in 0..w.nx {
                assert_eq!(f.cell_value(i, j), g.cell_value(i, j));
            }
        }
    }
}
