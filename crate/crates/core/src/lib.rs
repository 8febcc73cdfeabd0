//! Deterministic particle trajectories guided by a numerically evolved wave
//! function, with statistical and analytic diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod fieldio;
pub mod grid;
pub mod guidance;
pub mod harness;
pub mod interp;
pub mod measurement;
pub mod polar;
pub mod potential;
pub mod propagator;
pub mod spectral;
pub mod state;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
