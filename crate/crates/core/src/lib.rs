// SPDX-License-Identifier: Apache-2.0

//! Spin-boson reduced dynamics under the second-order time-convolutionless
//! (TCL2) Bloch equations, and the trace-distance measure of
//! non-Markovianity built on top of them.
//!
//! Module layout follows the data flow:
//!
//! - [`bath`]: spectral densities, bath kernels, the resonance curve and the
//!   quadrature engine behind them.
//! - [`tcl`]: time-dependent master-equation coefficients and their tables.
//! - [`dynamics`]: Bloch-vector propagation and trace distances.
//! - [`measure`]: backflow accumulation and Monte Carlo maximisation.
//! - [`sweep`]: parallel `(Ω, T)` sweeps with checkpointing and export.
//!
//! All quantities are in units of the system frequency ω0.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod measure;
pub mod sweep;
pub mod tcl;

pub use error::{Error, Result};
