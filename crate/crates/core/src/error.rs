// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NoConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    /// A Matsubara frequency sits on top of the Lorentz-Drude pole.
    #[error("Matsubara frequency nu_{index} = {nu} coincides with cutoff {cutoff}")]
    PoleCoincidence { index: usize, nu: f64, cutoff: f64 },

    #[error(
        "coefficient grid too coarse: interpolation error {error:e} at t = {t} exceeds {limit:e}"
    )]
    GridTooCoarse { t: f64, error: f64, limit: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("checkpoint {path} is unreadable: {reason}")]
    CheckpointCorrupt { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
