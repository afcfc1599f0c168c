//! Numerical toolkit for two-fluid vortex-sheet interfaces: boundary-integral
//! velocity evaluation, chord-arc monitoring, splash-frame geometry,
//! singular-integral envelope verification, and interfacial gradient recovery.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod recovery;
pub mod scenarios;
pub mod spectral;
pub mod splash;

pub use error::{Error, Result};
pub use geometry::{Mat2, PeriodicCurve, RigidMap, Vec2, TWO_PI};
