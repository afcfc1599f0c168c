//! Periodic interface representation, spectral differentiation, normals,
//! curvature, and the chord-arc functionals.
//!
//! A curve is stored through its periodic offset `w(alpha) = z(alpha) - (alpha, 0)`,
//! so `z(alpha + 2pi) = z(alpha) + (2pi, 0)` holds by construction. Derivatives
//! are trigonometric: the bound checks downstream are sensitive to derivative
//! error near a near-self-intersection, and finite differences are not enough.

use crate::error::{Error, Result};
use crate::spectral::TrigSeries;
use std::io::{BufRead, Write};
use std::path::Path;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Rotate a vector by +90 degrees: `(x1, x2)^perp = (-x2, x1)`.
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Sampled 2pi-periodic interface parameterization with cached spectral
/// derivatives.
#[derive(Debug, Clone)]
pub struct PeriodicCurve {
    n: usize,
    offsets: Vec<Vec2>,
    series: [TrigSeries; 2],
    z_alpha: Vec<Vec2>,
    z_alpha_alpha: Vec<Vec2>,
}

impl PeriodicCurve {
    /// Build from per-sample offsets `w(alpha_j)` on the uniform grid
    /// `alpha_j = 2pi j / n`. Requires `n` a power of two, at least 16.
    pub fn from_offsets(offsets: Vec<Vec2>) -> Result<Self> {
        let n = offsets.len();
        if n < 16 {
            return Err(Error::TooFewSamples(n));
        }
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let w1: Vec<f64> = offsets.iter().map(|w| w.x).collect();
        let w2: Vec<f64> = offsets.iter().map(|w| w.y).collect();
        let series = [TrigSeries::from_samples(&w1), TrigSeries::from_samples(&w2)];
        let d1 = [series[0].derivative_samples(1), series[1].derivative_samples(1)];
        let d2 = [series[0].derivative_samples(2), series[1].derivative_samples(2)];
        let z_alpha = (0..n)
            .map(|j| Vec2::new(1.0 + d1[0][j], d1[1][j]))
            .collect();
        let z_alpha_alpha = (0..n).map(|j| Vec2::new(d2[0][j], d2[1][j])).collect();
        Ok(Self {
            n,
            offsets,
            series,
            z_alpha,
            z_alpha_alpha,
        })
    }

    /// Build by sampling a closure returning the full position `z(alpha)`.
    pub fn from_fn(n: usize, z: impl Fn(f64) -> Vec2) -> Result<Self> {
        let offsets = (0..n)
            .map(|j| {
                let a = TWO_PI * j as f64 / n as f64;
                z(a) - Vec2::new(a, 0.0)
            })
            .collect();
        Self::from_offsets(offsets)
    }

    /// Flat interface `z = (alpha, 0)`.
    pub fn flat(n: usize) -> Self {
        Self::from_offsets(vec![Vec2::zeros(); n]).expect("flat curve")
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn alpha(&self, j: usize) -> f64 {
        TWO_PI * j as f64 / self.n as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.alpha(j))
    }

    pub fn offset(&self, j: usize) -> Vec2 {
        self.offsets[j]
    }

    pub fn point(&self, j: usize) -> Vec2 {
        Vec2::new(self.alpha(j), 0.0) + self.offsets[j]
    }

    pub fn z_alpha(&self, j: usize) -> Vec2 {
        self.z_alpha[j]
    }

    pub fn z_alpha_alpha(&self, j: usize) -> Vec2 {
        self.z_alpha_alpha[j]
    }

    /// Trigonometric interpolation of `z` at arbitrary alpha.
    pub fn eval(&self, alpha: f64) -> Vec2 {
        Vec2::new(
            alpha + self.series[0].eval(alpha),
            self.series[1].eval(alpha),
        )
    }

    pub fn eval_z_alpha(&self, alpha: f64) -> Vec2 {
        Vec2::new(
            1.0 + self.series[0].eval_deriv(alpha, 1),
            self.series[1].eval_deriv(alpha, 1),
        )
    }

    pub fn eval_z_alpha_alpha(&self, alpha: f64) -> Vec2 {
        Vec2::new(
            self.series[0].eval_deriv(alpha, 2),
            self.series[1].eval_deriv(alpha, 2),
        )
    }

    pub fn min_z_alpha_norm(&self) -> f64 {
        self.z_alpha
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Translated copy (rigid motion preserving periodicity).
    pub fn translated(&self, shift: Vec2) -> Self {
        let offsets = self.offsets.iter().map(|w| w + shift).collect();
        Self::from_offsets(offsets).expect("translation preserves validity")
    }

    /// Chord between `z(a)` and the nearest periodic image of `z(b)`.
    ///
    /// Returns `(chord, delta)` with `delta = a - (b + 2 pi k)` reduced to
    /// `[-pi, pi]`. The half-period tie `|a - b| = pi` is broken toward the
    /// direct chord (no image shift): that is the pair the caller names, and
    /// the splash diagnostics probe exactly such antipodal pairs.
    pub fn periodic_chord(&self, a: f64, b: f64) -> (Vec2, f64) {
        let q = (a - b) / TWO_PI;
        let mut k = q.round();
        if (q - k).abs() == 0.5 {
            k = q.trunc();
        }
        let shift = TWO_PI * k;
        let delta = (a - b) - shift;
        let chord = self.eval(a) - self.eval(b) - Vec2::new(shift, 0.0);
        (chord, delta)
    }

    pub(crate) fn periodic_chord_grid(&self, i: usize, j: usize) -> (Vec2, f64) {
        let (a, b) = (self.alpha(i), self.alpha(j));
        let q = (a - b) / TWO_PI;
        let mut k = q.round();
        if (q - k).abs() == 0.5 {
            k = q.trunc();
        }
        let shift = TWO_PI * k;
        (
            self.point(i) - self.point(j) - Vec2::new(shift, 0.0),
            (a - b) - shift,
        )
    }

    /// Serialize to the plain-text sample format:
    /// header line `n_samples`, then rows `alpha w1 w2`.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{}", self.n)?;
        for j in 0..self.n {
            let w = self.offsets[j];
            writeln!(f, "{:e} {:e} {:e}", self.alpha(j), w.x, w.y)?;
        }
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut lines = f.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse {
                what: "curve".into(),
                detail: "empty file".into(),
            })??;
        let n: usize = header.trim().parse().map_err(|_| Error::Parse {
            what: "curve".into(),
            detail: format!("bad header {header:?}"),
        })?;
        let mut offsets = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(Error::Parse {
                    what: "curve".into(),
                    detail: format!("expected 3 columns, got {}", cols.len()),
                });
            }
            let w1: f64 = cols[1].parse().map_err(|_| Error::Parse {
                what: "curve".into(),
                detail: format!("bad float {:?}", cols[1]),
            })?;
            let w2: f64 = cols[2].parse().map_err(|_| Error::Parse {
                what: "curve".into(),
                detail: format!("bad float {:?}", cols[2]),
            })?;
            offsets.push(Vec2::new(w1, w2));
        }
        if offsets.len() != n {
            return Err(Error::SampleCountMismatch {
                expected: n,
                got: offsets.len(),
            });
        }
        Self::from_offsets(offsets)
    }
}

/// Rigid transformation `R(x) = Q x + t` with `Q` orthogonal.
#[derive(Debug, Clone, Copy)]
pub struct RigidMap {
    pub q: Mat2,
    pub t: Vec2,
}

impl RigidMap {
    pub fn identity() -> Self {
        Self {
            q: Mat2::identity(),
            t: Vec2::zeros(),
        }
    }

    /// Rotation by `angle` followed by translation.
    pub fn rotation(angle: f64, t: Vec2) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            q: Mat2::new(c, -s, s, c),
            t,
        }
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        self.q * x + self.t
    }

    pub fn inverse_apply(&self, x: Vec2) -> Vec2 {
        self.q.transpose() * (x - self.t)
    }

    /// Rotate a vector without translating (for directions).
    pub fn rotate(&self, v: Vec2) -> Vec2 {
        self.q * v
    }

    pub fn det_q(&self) -> f64 {
        self.q.determinant()
    }
}

/// Chord-arc functional `F_z(alpha, beta)`.
///
/// `|z(a)-z(b)| / |a-b|` for distinct parameters (with `|a-b|` the periodic
/// representative) and `|z_alpha(a)|` on the diagonal.
pub fn chord_arc_f(curve: &PeriodicCurve, alpha: f64, beta: f64) -> f64 {
    let (chord, delta) = curve.periodic_chord(alpha, beta);
    // Below ~1e-9 separation the chord is pure cancellation noise; return
    // the diagonal limit |z_alpha| instead (error O(1e-9) for C^2 curves).
    if delta.abs() < 1e-9 {
        curve.eval_z_alpha(alpha).norm()
    } else {
        chord.norm() / delta.abs()
    }
}

/// Result of minimizing `F_z` over pairs.
#[derive(Debug, Clone)]
pub struct ChordArcReport {
    pub ca_value: f64,
    pub argmin_pair: (f64, f64),
    pub fz_at_argmin: f64,
    pub on_diagonal: bool,
}

/// Infimum of `F_z` over the sampled pair grid, refined by golden-section
/// descent around the discrete argmin.
pub fn chord_arc_min(curve: &PeriodicCurve) -> ChordArcReport {
    let n = curve.n_samples();
    let h = TWO_PI / n as f64;

    // Diagonal branch: min |z_alpha|.
    let mut diag_j = 0;
    let mut diag_val = f64::INFINITY;
    for j in 0..n {
        let v = curve.z_alpha(j).norm();
        if v < diag_val {
            diag_val = v;
            diag_j = j;
        }
    }
    let diag_alpha = refine_1d(
        |a| curve.eval_z_alpha(a).norm(),
        curve.alpha(diag_j) - 2.0 * h,
        curve.alpha(diag_j) + 2.0 * h,
    );
    let diag_val = curve.eval_z_alpha(diag_alpha).norm();

    // Off-diagonal branch over the grid of pairs.
    let mut best = (0usize, 0usize);
    let mut best_val = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let (chord, delta) = curve.periodic_chord_grid(i, j);
            if delta == 0.0 {
                continue;
            }
            let v = chord.norm() / delta.abs();
            if v < best_val {
                best_val = v;
                best = (i, j);
            }
        }
    }
    let (mut a, mut b) = (curve.alpha(best.0), curve.alpha(best.1));
    // Golden-section coordinate descent in a 2-cell neighborhood.
    for _ in 0..8 {
        a = refine_1d(|x| chord_arc_f(curve, x, b), a - 2.0 * h, a + 2.0 * h);
        b = refine_1d(|x| chord_arc_f(curve, a, x), b - 2.0 * h, b + 2.0 * h);
    }
    let off_val = chord_arc_f(curve, a, b);

    // Off-diagonal refinement can collapse onto the diagonal, where the two
    // branches agree in the limit; prefer the diagonal label there.
    if diag_val <= off_val + 1e-9 * (1.0 + off_val) {
        ChordArcReport {
            ca_value: diag_val,
            argmin_pair: (diag_alpha, diag_alpha),
            fz_at_argmin: diag_val,
            on_diagonal: true,
        }
    } else {
        ChordArcReport {
            ca_value: off_val,
            argmin_pair: (a, b),
            fz_at_argmin: off_val,
            on_diagonal: false,
        }
    }
}

/// Golden-section minimization of a unimodal-ish scalar function.
pub(crate) fn refine_1d(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..64 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Interface normal `n = -(z_alpha)^perp`, pointing into the viscous region.
pub fn normal(curve: &PeriodicCurve, alpha: f64) -> Vec2 {
    -perp(curve.eval_z_alpha(alpha))
}

/// Signed curvature `K = (z1' z2'' - z2' z1'') / |z_alpha|^3`.
pub fn curvature(curve: &PeriodicCurve, alpha: f64) -> f64 {
    let d1 = curve.eval_z_alpha(alpha);
    let d2 = curve.eval_z_alpha_alpha(alpha);
    (d1.x * d2.y - d1.y * d2.x) / d1.norm().powi(3)
}
