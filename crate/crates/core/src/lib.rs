//! Fringe-pattern analysis toolkit.
//!
//! Implements the full desk-scale pipeline for carrier-fringe phase
//! demodulation and evaluation:
//!
//! - [`synth`] — parametric phase surfaces rendered into noisy, quantized,
//!   phase-shifted fringe stacks with phase-shifting ground truth.
//! - [`classical`] — N-step phase-shifting, Fourier-transform and
//!   windowed-Fourier-transform demodulators, plus the shared
//!   four-quadrant arctangent.
//! - [`nn`] — a minimal deterministic tensor/training engine (conv2d with
//!   exact gradients, residual blocks, resampling, MSE, Adam).
//! - [`neural`] — the two-stage learned demodulator: one network estimates
//!   the background intensity, a second predicts the arctangent numerator
//!   and denominator from (fringe, background).
//! - [`unwrap`] — two-frequency temporal phase unwrapping.
//! - [`eval`] — masked phase-error statistics, an idealized phase-to-height
//!   model, least-squares sphere fitting, and method comparison reports.
//! - [`io`] — the on-disk formats: binary PGM, the FPT1 raw tensor format,
//!   FPW1 weight checkpoints, dataset manifests, and PNG heatmaps.

pub mod classical;
pub mod error;
pub mod eval;
pub mod field;
pub mod io;
pub mod neural;
pub mod nn;
pub mod synth;
pub mod unwrap;

pub use error::{Error, Result};
pub use field::{wrap_phase, Grid, Image, Mask, PhaseField, PhasorField};
