//! Error types shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve needs at least 16 samples (got {0})")]
    TooFewSamples(usize),
    #[error("sample count must be a power of two (got {0})")]
    NotPowerOfTwo(usize),
    #[error("sample count mismatch: expected {expected}, got {got}")]
    SampleCountMismatch { expected: usize, got: usize },
    #[error("self-touching curve: |z(a)-z(b)| = {dist:e} below 1e-14 at off-diagonal pair")]
    SingularTarget { dist: f64 },
    #[error("bulk vorticity region mask is empty")]
    QuadratureUnderflow,
    #[error("no splash candidate: CA = {ca:e} exceeds threshold {threshold:e}")]
    NoSplashCandidate { ca: f64, threshold: f64 },
    #[error("curve is not a graph over the frame window near alpha = {alpha}")]
    GraphExtractionFailed { alpha: f64 },
    #[error("probe lies outside the frame window")]
    OutsideWindow,
    #[error("h_d representation and direct kernel difference disagree: {frame_route:e} vs {direct_route:e} (tol {tol:e})")]
    InconsistentRepresentations {
        frame_route: f64,
        direct_route: f64,
        tol: f64,
    },
    #[error("log-Gronwall integration requires D0 > 1 (got {0})")]
    DomainError(f64),
    #[error("omega_Gamma changes sign; p = {p} is not an even integer")]
    NonIntegerPowerOfSigned { p: f64 },
    #[error("recovery system ill-conditioned: cond = {cond:e}")]
    IllConditioned { cond: f64 },
    #[error("step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },
    #[error("malformed {what} file: {detail}")]
    Parse { what: String, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
