//! Discrete-Fourier differentiation and trigonometric interpolation for
//! 2pi-periodic sample sets.

use num_complex::Complex;
use rustfft::FftPlanner;

/// Trigonometric interpolant of a real 2pi-periodic sample set.
///
/// Coefficients are stored in FFT layout; signed frequencies are recovered as
/// `k` for `k < n/2` and `k - n` otherwise. The Nyquist mode is split evenly
/// between +n/2 and -n/2 for evaluation and dropped for derivatives.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    n: usize,
    coeffs: Vec<Complex<f64>>,
}

impl TrigSeries {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mut buf: Vec<Complex<f64>> =
            samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        Self { n, coeffs: buf }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    fn signed_freq(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let k = idx as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Samples of the m-th derivative on the uniform grid.
    pub fn derivative_samples(&self, order: u32) -> Vec<f64> {
        let n = self.n;
        let mut buf = self.coeffs.clone();
        for (idx, c) in buf.iter_mut().enumerate() {
            let k = if idx == n / 2 { 0 } else { self.signed_freq(idx) };
            let ik = Complex::new(0.0, k as f64);
            *c *= ik.powu(order);
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Evaluate the m-th derivative of the interpolant at arbitrary alpha.
    pub fn eval_deriv(&self, alpha: f64, order: u32) -> f64 {
        let n = self.n;
        let mut acc = Complex::new(0.0, 0.0);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = self.signed_freq(idx);
            // Nyquist: split between +n/2 and -n/2; contributes only at order 0.
            if idx == n / 2 {
                if order == 0 {
                    acc += c * ((n as f64 / 2.0) * alpha).cos();
                }
                continue;
            }
            let ik = Complex::new(0.0, k as f64);
            let phase = Complex::from_polar(1.0, k as f64 * alpha);
            acc += c * ik.powu(order) * phase;
        }
        acc.re
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.eval_deriv(alpha, 0)
    }
}

/// Reduce a parameter difference to its representative in (-pi, pi].
pub fn periodic_diff(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = (a - b) % two_pi;
    if d > std::f64::consts::PI {
        d -= two_pi;
    } else if d <= -std::f64::consts::PI {
        d += two_pi;
    }
    d
}

/// Trapezoid rule over one period for uniform samples (periodic: plain mean).
pub fn periodic_trapezoid(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    samples.iter().sum::<f64>() * (2.0 * std::f64::consts::PI) / n
}
