// SPDX-License-Identifier: Apache-2.0

//! Second-order TCL coefficients of the Bloch equations.
//!
//! The Bloch drift contains three real functions of time,
//!
//! ```text
//! a_yx(t) =  ½ ∫₀ᵗ ds D1(s) sin(ω0 s)
//! a_zz(t) = −½ ∫₀ᵗ ds D1(s) cos(ω0 s)
//! b_z(t)  = −½ ∫₀ᵗ ds D(s)  sin(ω0 s)
//! ```
//!
//! `b_z` has a closed form. For `a_yx` and `a_zz` this module offers the
//! frequency-domain filter-function form (time integral done analytically,
//! frequency integral by quadrature), and [`series`] offers the Matsubara
//! form (frequency integral done by residues, time integral analytically),
//! which is what [`CoefficientTable`] is built from.

pub mod series;
mod table;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bath::quadrature::{integrate_tail, integrate_with_breaks, Tail};
use crate::bath::{effective_spectral_density, ModelParams, QuadratureConfig, OMEGA0};
use crate::error::{Error, Result};
pub use series::SeriesCoefficients;
pub use table::{build_table, CoefficientTable, TableOptions};

/// Distance from ω0 inside which removable singularities take their limit.
const SINGULAR_WINDOW: f64 = 1e-6;

/// The three Bloch-equation coefficients at one instant. `t = +∞` marks
/// stationary (Redfield) values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub t: f64,
    pub a_yx: f64,
    pub a_zz: f64,
    pub b_z: f64,
}

impl CoefficientSet {
    pub fn zero(t: f64) -> Self {
        Self {
            t,
            a_yx: 0.0,
            a_zz: 0.0,
            b_z: 0.0,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.t == f64::INFINITY
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a_yx, self.a_zz, self.b_z]
    }

    pub fn from_array(t: f64, v: [f64; 3]) -> Self {
        Self {
            t,
            a_yx: v[0],
            a_zz: v[1],
            b_z: v[2],
        }
    }
}

/// Which coefficients drive the Bloch equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Time-dependent TCL2 coefficients.
    Tcl2,
    /// Stationary-rate approximation: coefficients frozen at `t → ∞`.
    Redfield,
}

impl fmt::Display for RateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateMode::Tcl2 => "tcl2",
            RateMode::Redfield => "redfield",
        })
    }
}

impl FromStr for RateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tcl2" => Ok(RateMode::Tcl2),
            "redfield" => Ok(RateMode::Redfield),
            other => Err(Error::InvalidParameter(format!(
                "unknown rate mode {other:?} (expected tcl2 or redfield)"
            ))),
        }
    }
}

/// `sin(x t) / x`, limit `t` at `x → 0`.
fn sin_over(x: f64, t: f64) -> f64 {
    if x.abs() < SINGULAR_WINDOW {
        t
    } else {
        (x * t).sin() / x
    }
}

/// `(1 − cos(x t)) / x`, limit `0` at `x → 0`.
fn one_minus_cos_over(x: f64, t: f64) -> f64 {
    if x.abs() < SINGULAR_WINDOW {
        0.0
    } else {
        let h = (0.5 * x * t).sin();
        2.0 * h * h / x
    }
}

/// Filter function of `a_zz`: `∫₀ᵗ cos(ωs) cos(ω0 s) ds`.
pub fn filter_cos(omega: f64, t: f64) -> f64 {
    0.5 * (sin_over(omega + OMEGA0, t) + sin_over(omega - OMEGA0, t))
}

/// Filter function of `a_yx`: `∫₀ᵗ cos(ωs) sin(ω0 s) ds`.
pub fn filter_sin(omega: f64, t: f64) -> f64 {
    0.5 * (one_minus_cos_over(OMEGA0 + omega, t) + one_minus_cos_over(OMEGA0 - omega, t))
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time must be non-negative, got {t}"
        )));
    }
    Ok(())
}

fn head_breaks(q: &QuadratureConfig, t: f64) -> Vec<f64> {
    let mut breaks = q.split_points.clone();
    let width = 4.0 * PI / t;
    let n = (q.truncation / width).ceil().min(1e6) as usize;
    breaks.extend((1..n).map(|i| i as f64 * q.truncation / n as f64));
    breaks
}

/// `a_zz(t) = −∫₀^∞ J_eff(ω) f_c(ω, t) dω` by frequency quadrature.
pub fn coeff_azz(t: f64, p: &ModelParams, q: &QuadratureConfig) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 || p.gamma == 0.0 {
        return Ok(0.0);
    }
    let f = |w: f64| effective_spectral_density(w, p) * filter_cos(w, t);
    let head = integrate_with_breaks(
        f,
        0.0,
        q.truncation,
        &head_breaks(q, t),
        0.5 * q.abs_tol,
        q.rel_tol,
        q.max_subdivisions,
    )?;
    let tail_cfg = QuadratureConfig {
        abs_tol: 0.5 * q.abs_tol,
        ..q.clone()
    };
    let tail = integrate_tail(
        f,
        q.truncation,
        Tail::Oscillatory { frequency: t },
        &tail_cfg,
    )?;
    Ok(-(head + tail).value)
}

/// `a_yx(t) = ∫₀^∞ J_eff(ω) f_s(ω, t) dω` by frequency quadrature.
///
/// Beyond the truncation the filter splits into the smooth stationary part
/// `1/(ω0² − ω²)·ω0` and an oscillatory remainder, each with its own tail rule.
pub fn coeff_ayx(t: f64, p: &ModelParams, q: &QuadratureConfig) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 || p.gamma == 0.0 {
        return Ok(0.0);
    }
    let f = |w: f64| effective_spectral_density(w, p) * filter_sin(w, t);
    let head = integrate_with_breaks(
        f,
        0.0,
        q.truncation,
        &head_breaks(q, t),
        0.5 * q.abs_tol,
        q.rel_tol,
        q.max_subdivisions,
    )?;
    let tail_cfg = QuadratureConfig {
        abs_tol: 0.25 * q.abs_tol,
        ..q.clone()
    };
    let smooth = |w: f64| effective_spectral_density(w, p) * OMEGA0 / (OMEGA0 * OMEGA0 - w * w);
    let oscillating = |w: f64| {
        -0.5 * effective_spectral_density(w, p)
            * (((OMEGA0 + w) * t).cos() / (OMEGA0 + w) + ((OMEGA0 - w) * t).cos() / (OMEGA0 - w))
    };
    let tail_smooth = integrate_tail(smooth, q.truncation, Tail::Decaying, &tail_cfg)?;
    let tail_osc = integrate_tail(
        oscillating,
        q.truncation,
        Tail::Oscillatory { frequency: t },
        &tail_cfg,
    )?;
    Ok((head + tail_smooth + tail_osc).value)
}

/// Closed form of `b_z(t)`.
pub fn coeff_bz(t: f64, p: &ModelParams) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let (w0, c) = (OMEGA0, p.cutoff);
    let decay = (-c * t).exp();
    -(p.gamma * c * c / (2.0 * w0)) * (w0 - decay * (w0 * (w0 * t).cos() + c * (w0 * t).sin()))
        / (c * c + w0 * w0)
}

/// `b_z(∞) = −γΩ² / (2(Ω² + ω0²))`.
pub fn stationary_bz(p: &ModelParams) -> f64 {
    let c2 = p.cutoff * p.cutoff;
    -p.gamma * c2 / (2.0 * (c2 + OMEGA0 * OMEGA0))
}

/// `a_zz(∞) = −(π/2) J_eff(ω0)`.
pub fn stationary_azz(p: &ModelParams) -> f64 {
    -0.5 * PI * effective_spectral_density(OMEGA0, p)
}

/// Principal value `PV ∫₀^∞ J_eff(ω) ω0 / (ω0² − ω²) dω`.
///
/// The pole is removed by subtracting `J_eff(ω0)` on `[0, 2ω0]`, where the
/// principal value of `ω0/(ω0² − ω²)` is `½ ln 3`.
pub fn stationary_ayx(p: &ModelParams, q: &QuadratureConfig) -> Result<f64> {
    if p.gamma == 0.0 {
        return Ok(0.0);
    }
    let g1 = effective_spectral_density(OMEGA0, p);
    let h = 1e-4;
    let slope = (effective_spectral_density(OMEGA0 + h, p)
        - effective_spectral_density(OMEGA0 - h, p))
        / (2.0 * h);
    let near = |w: f64| {
        let x = w - OMEGA0;
        if x.abs() < SINGULAR_WINDOW {
            // (g(ω) − g(ω0)) ω0 / ((ω0 − ω)(ω0 + ω)) → −g'(ω0) / 2
            -slope * OMEGA0 / (2.0 * OMEGA0)
        } else {
            (effective_spectral_density(w, p) - g1) * OMEGA0 / (OMEGA0 * OMEGA0 - w * w)
        }
    };
    let upper = 2.0 * OMEGA0;
    let inner = integrate_with_breaks(
        near,
        0.0,
        upper,
        &[OMEGA0, p.cutoff],
        0.5 * q.abs_tol,
        q.rel_tol,
        q.max_subdivisions,
    )?;
    let outer_cfg = QuadratureConfig {
        abs_tol: 0.5 * q.abs_tol,
        ..q.clone()
    };
    let far = |w: f64| effective_spectral_density(w, p) * OMEGA0 / (OMEGA0 * OMEGA0 - w * w);
    let outer = if q.truncation > upper {
        integrate_with_breaks(
            far,
            upper,
            q.truncation,
            &q.split_points,
            outer_cfg.abs_tol,
            q.rel_tol,
            q.max_subdivisions,
        )? + integrate_tail(far, q.truncation, Tail::Decaying, &outer_cfg)?
    } else {
        integrate_tail(far, upper, Tail::Decaying, &outer_cfg)?
    };
    Ok(inner.value + g1 * 0.5 * 3f64.ln() + outer.value)
}

/// Stationary (Redfield) coefficients with the `t = +∞` sentinel.
pub fn stationary_coeffs(p: &ModelParams, q: &QuadratureConfig) -> Result<CoefficientSet> {
    p.validate()?;
    Ok(CoefficientSet {
        t: f64::INFINITY,
        a_yx: stationary_ayx(p, q)?,
        a_zz: stationary_azz(p),
        b_z: stationary_bz(p),
    })
}

/// All three coefficients at time `t` through the frequency-domain route.
pub fn coefficients_frequency_domain(
    t: f64,
    p: &ModelParams,
    q: &QuadratureConfig,
) -> Result<CoefficientSet> {
    Ok(CoefficientSet {
        t,
        a_yx: coeff_ayx(t, p, q)?,
        a_zz: coeff_azz(t, p, q)?,
        b_z: coeff_bz(t, p),
    })
}
