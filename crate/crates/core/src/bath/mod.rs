// SPDX-License-Identifier: Apache-2.0

//! Ohmic bath with Lorentz-Drude cutoff.
//!
//! All frequencies, temperatures and times are measured in units of the
//! system frequency ω0, which is fixed to one. The spectral density is
//!
//! ```text
//! J(ω) = (γ/π) ω Ω² / (Ω² + ω²)
//! ```
//!
//! and the effective (thermally weighted) density is `J(ω) coth(ω / 2T)`.

mod matsubara;
pub mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use matsubara::MatsubaraExpansion;
pub use quadrature::{Estimate, QuadratureConfig, Tail};

/// The system frequency. Every other quantity is expressed in its units.
pub const OMEGA0: f64 = 1.0;

/// Bath and coupling parameters in units of ω0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Coupling strength γ.
    pub gamma: f64,
    /// Lorentz-Drude cutoff Ω.
    pub cutoff: f64,
    /// Bath temperature T (k_B = 1). Zero means the coth → 1 limit.
    pub temperature: f64,
}

impl ModelParams {
    pub fn new(gamma: f64, cutoff: f64, temperature: f64) -> Result<Self> {
        let p = Self {
            gamma,
            cutoff,
            temperature,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be non-negative and finite, got {}",
                self.gamma
            )));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cutoff must be positive, got {}",
                self.cutoff
            )));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Inverse temperature; infinite at T = 0.
    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// Same bath with a different coupling.
    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

/// `ω coth(ω / 2T)`, finite at ω = 0 (limit 2T) and equal to ω at T = 0.
pub(crate) fn thermal_weight(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return omega;
    }
    let u = omega / (2.0 * temperature);
    let u_coth_u = if u.abs() < 1e-4 {
        1.0 + u * u / 3.0
    } else if u > 20.0 {
        u
    } else {
        u / u.tanh()
    };
    2.0 * temperature * u_coth_u
}

/// Ohmic spectral density with Lorentz-Drude cutoff.
pub fn spectral_density(omega: f64, p: &ModelParams) -> f64 {
    let c2 = p.cutoff * p.cutoff;
    p.gamma / PI * omega / OMEGA0 * c2 / (c2 + omega * omega)
}

/// `J(ω) coth(ω / 2T)`; at ω = 0 the limit `2γT / (π ω0)`.
pub fn effective_spectral_density(omega: f64, p: &ModelParams) -> f64 {
    let c2 = p.cutoff * p.cutoff;
    p.gamma / PI / OMEGA0 * c2 / (c2 + omega * omega) * thermal_weight(omega, p.temperature)
}

/// Dissipation kernel `D(s) = 2∫ J(ω) sin(ωs) dω = (γΩ²/ω0) e^{−Ωs}`.
///
/// At `s = 0` this returns the right limit `γΩ²/ω0`.
pub fn dissipation_kernel(s: f64, p: &ModelParams) -> f64 {
    p.gamma * p.cutoff * p.cutoff / OMEGA0 * (-p.cutoff * s).exp()
}

/// Direct frequency quadrature of the dissipation kernel. Reference route for
/// validating [`dissipation_kernel`]; `s` must be positive.
pub fn dissipation_kernel_quadrature(s: f64, p: &ModelParams, q: &QuadratureConfig) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadrature of D(s) requires s > 0, got {s}"
        )));
    }
    let est = quadrature::integrate_semi_infinite(
        |w| 2.0 * spectral_density(w, p) * (w * s).sin(),
        q,
        Tail::Oscillatory { frequency: s },
    )?;
    Ok(est.value)
}

/// Evaluation route used for a noise-kernel value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    Matsubara,
    Quadrature,
}

/// Noise-kernel value with the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseKernel {
    pub value: f64,
    pub method: KernelMethod,
    /// Set when the Matsubara route was skipped because a Matsubara
    /// frequency coincides with the cutoff.
    pub pole_coincidence: bool,
}

/// Noise kernel `D1(s) = 2∫ J(ω) coth(ω/2T) cos(ωs) dω`.
///
/// Uses the Matsubara series when it is available and falls back to
/// frequency quadrature at T = 0 or at a pole coincidence. For the
/// Lorentz-Drude density `D1` diverges logarithmically as `s → 0`, so
/// `s = 0` yields `+∞`.
pub fn noise_kernel(s: f64, p: &ModelParams, q: &QuadratureConfig) -> Result<NoiseKernel> {
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "s must be non-negative, got {s}"
        )));
    }
    if p.temperature == 0.0 {
        return Ok(NoiseKernel {
            value: noise_kernel_quadrature(s, p, q)?,
            method: KernelMethod::Quadrature,
            pole_coincidence: false,
        });
    }
    match MatsubaraExpansion::new(p) {
        Ok(series) => Ok(NoiseKernel {
            value: series.noise_kernel(s),
            method: KernelMethod::Matsubara,
            pole_coincidence: false,
        }),
        Err(Error::PoleCoincidence { .. }) => Ok(NoiseKernel {
            value: noise_kernel_quadrature(s, p, q)?,
            method: KernelMethod::Quadrature,
            pole_coincidence: true,
        }),
        Err(e) => Err(e),
    }
}

/// Frequency quadrature of the noise kernel.
pub fn noise_kernel_quadrature(s: f64, p: &ModelParams, q: &QuadratureConfig) -> Result<f64> {
    if s == 0.0 {
        return Ok(if p.gamma == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let est = quadrature::integrate_semi_infinite(
        |w| 2.0 * effective_spectral_density(w, p) * (w * s).cos(),
        q,
        Tail::Oscillatory { frequency: s },
    )?;
    Ok(est.value)
}

/// Cutoff at which the maximum of `J_eff(ω)` sits exactly at ω0:
///
/// ```text
/// Ω_res(T) = ω0 sqrt[(T sinh(ω0/T) + ω0) / (T sinh(ω0/T) − ω0)]
/// ```
///
/// Returns ω0 for `T = 0` (the limit) and for temperatures so low that
/// `sinh(ω0/T)` overflows.
pub fn resonance_cutoff(temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return OMEGA0;
    }
    let x = OMEGA0 / temperature;
    // sinh(x)/x and sinh(x)/x - 1 without cancellation at small x.
    let (shx, shx_m1) = if x < 0.1 {
        let x2 = x * x;
        let m1 = x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0 * (1.0 + x2 / 72.0)));
        (1.0 + m1, m1)
    } else {
        let r = x.sinh() / x;
        (r, r - 1.0)
    };
    if !shx.is_finite() {
        return OMEGA0;
    }
    OMEGA0 * ((shx + 1.0) / shx_m1).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn p(gamma: f64, cutoff: f64, temperature: f64) -> ModelParams {
        ModelParams::new(gamma, cutoff, temperature).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        assert_eq!(spectral_density(0.0, &p(0.1, 1.0, 1.0)), 0.0);
        assert_abs_diff_eq!(
            spectral_density(1.0, &p(0.1, 1.0, 1.0)),
            0.1 / (2.0 * PI),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            spectral_density(1.0, &p(0.1, 1.0, 1.0)),
            0.015_915_5,
            epsilon = 1e-7
        );
    }

    #[test]
    fn spectral_density_peaks_at_cutoff() {
        let params = p(0.1, 2.0, 1.0);
        // dJ/dω ∝ (Ω² − ω²): positive below Ω, negative above.
        let h = 1e-5;
        let slope = |w: f64| {
            (spectral_density(w + h, &params) - spectral_density(w - h, &params)) / (2.0 * h)
        };
        assert!(slope(1.99) > 0.0);
        assert!(slope(2.01) < 0.0);
        assert_abs_diff_eq!(slope(2.0), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn spectral_density_high_frequency_tail() {
        let params = p(0.1, 1.5, 1.0);
        let w = 1e3 * params.cutoff;
        let asym = params.gamma * params.cutoff.powi(2) / (PI * w);
        assert!((spectral_density(w, &params) / asym - 1.0).abs() < 0.01);
    }

    #[test]
    fn effective_density_limits() {
        let params = p(0.1, 1.0, 1.0);
        assert_abs_diff_eq!(
            effective_spectral_density(0.0, &params),
            0.2 / PI,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            effective_spectral_density(1e-9, &params),
            0.063_662,
            epsilon = 1e-6
        );
        let cold = p(0.1, 1.3, 0.0);
        for w in [0.0, 0.3, 1.0, 7.0] {
            assert_relative_eq!(
                effective_spectral_density(w, &cold),
                spectral_density(w, &cold),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn effective_density_is_flat_at_resonance() {
        let params = p(0.1, 1.55, 0.4);
        let h = 1e-5;
        let slope = (effective_spectral_density(1.0 + h, &params)
            - effective_spectral_density(1.0 - h, &params))
            / (2.0 * h);
        // Compare against the slope scale J_eff(ω0)/ω0.
        assert!(slope.abs() < 2e-3 * effective_spectral_density(1.0, &params));
    }

    #[test]
    fn resonance_values() {
        assert!((resonance_cutoff(0.4) - 1.552).abs() < 1e-3);
        assert_eq!(resonance_cutoff(0.0), 1.0);
        assert!((resonance_cutoff(0.01) - 1.0).abs() < 1e-12);
        for t in [100.0, 1000.0] {
            let slope = resonance_cutoff(t) / t;
            assert!((slope - 2.0 * 3f64.sqrt()).abs() < 1e-3, "{slope}");
        }
    }

    #[test]
    fn resonance_series_branch_is_continuous() {
        // x = 0.1 is where the series branch takes over.
        let below = resonance_cutoff(1.0 / 0.099_999_999);
        let above = resonance_cutoff(1.0 / 0.100_000_001);
        assert!((below / above - 1.0).abs() < 1e-7);
    }

    #[test]
    fn dissipation_kernel_closed_form() {
        let params = p(0.1, 1.0, 1.0);
        assert_abs_diff_eq!(dissipation_kernel(0.0, &params), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(dissipation_kernel(1.0, &params), 0.036_788, epsilon = 1e-6);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ModelParams::new(0.1, 0.0, 1.0).is_err());
        assert!(ModelParams::new(0.1, 1.0, -1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn noise_kernel_at_origin_diverges() {
        let params = p(0.1, 1.0, 1.0);
        let q = QuadratureConfig::for_params(&params);
        assert!(noise_kernel(0.0, &params, &q).unwrap().value.is_infinite());
        assert!(noise_kernel(-1.0, &params, &q).is_err());
    }
}
