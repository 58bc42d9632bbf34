// SPDX-License-Identifier: Apache-2.0

//! Exponential (pole) decomposition of the noise kernel.
//!
//! Closing the frequency contour of `D1(s)` in the upper half plane picks up
//! the Lorentz-Drude pole at `iΩ` and the Matsubara poles `iν_k`,
//! `ν_k = 2πkT`:
//!
//! ```text
//! D1(s) = γΩ² [ cot(Ω/2T) e^{−Ωs} + Σ_k 4T ν_k / (ν_k² − Ω²) e^{−ν_k s} ]
//! ```
//!
//! The Matsubara amplitudes fall off only like `1/k`; the leading `2/(πk)`
//! part is summed in closed form as a logarithm and the remainder
//! (`~ 1/k³`) is summed directly with an Euler-Maclaurin tail.

use std::f64::consts::PI;

use super::quadrature::{integrate_tail, QuadratureConfig, Tail};
use super::ModelParams;
use crate::error::{Error, Result};

/// Relative distance below which a Matsubara frequency counts as sitting on the cutoff.
pub const POLE_TOLERANCE: f64 = 1e-6;

/// Number of explicit terms before the Euler-Maclaurin tail takes over.
const EXPLICIT_TERMS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatsubaraExpansion {
    params: ModelParams,
    drude_amplitude: f64,
}

impl MatsubaraExpansion {
    /// Fails with [`Error::PoleCoincidence`] when some `ν_k` lies within
    /// [`POLE_TOLERANCE`]`·Ω` of the cutoff, and with
    /// [`Error::InvalidParameter`] at T = 0 where the series degenerates
    /// into an integral.
    pub fn new(p: &ModelParams) -> Result<Self> {
        p.validate()?;
        if p.temperature == 0.0 {
            return Err(Error::InvalidParameter(
                "Matsubara expansion requires T > 0".into(),
            ));
        }
        let step = 2.0 * PI * p.temperature;
        let k = (p.cutoff / step).round();
        if k >= 1.0 && (k * step - p.cutoff).abs() < POLE_TOLERANCE * p.cutoff {
            return Err(Error::PoleCoincidence {
                index: k as usize,
                nu: k * step,
                cutoff: p.cutoff,
            });
        }
        let drude_amplitude =
            p.gamma * p.cutoff * p.cutoff / (p.cutoff / (2.0 * p.temperature)).tan();
        Ok(Self {
            params: *p,
            drude_amplitude,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Matsubara frequency `ν_k = 2πkT` (real-valued `k` for tail integrals).
    pub fn nu(&self, k: f64) -> f64 {
        2.0 * PI * k * self.params.temperature
    }

    /// Amplitude of the `e^{−Ωs}` term.
    pub fn drude_amplitude(&self) -> f64 {
        self.drude_amplitude
    }

    /// Amplitude of the `e^{−ν_k s}` term.
    pub fn amplitude(&self, k: f64) -> f64 {
        let p = &self.params;
        let nu = self.nu(k);
        p.gamma * p.cutoff * p.cutoff * 4.0 * p.temperature * nu / (nu * nu - p.cutoff * p.cutoff)
    }

    /// Index beyond which `ν_k > 2Ω`, so amplitudes are positive and
    /// monotonically decreasing.
    pub(crate) fn regular_index(&self) -> usize {
        (2.0 * self.params.cutoff / self.nu(1.0)).floor() as usize + 1
    }

    /// `D1(s)` for `s > 0`; `+∞` at `s = 0`.
    pub fn noise_kernel(&self, s: f64) -> f64 {
        let p = &self.params;
        let g = p.gamma * p.cutoff * p.cutoff;
        if g == 0.0 {
            return 0.0;
        }
        if s <= 0.0 {
            return f64::INFINITY;
        }
        let x = self.nu(1.0) * s;
        let log_part = if x < std::f64::consts::LN_2 {
            (-(-x).exp_m1()).ln()
        } else {
            (-(-x).exp()).ln_1p()
        };
        let c2 = p.cutoff * p.cutoff;
        let remainder = self.sum(|k| {
            let nu = self.nu(k);
            (-nu * s).exp() / (nu * (nu * nu - c2))
        });
        self.drude_amplitude * (-p.cutoff * s).exp() - 2.0 * g / PI * log_part
            + g * 4.0 * p.temperature * c2 * remainder
    }

    /// Sums `term(k)` over `k = 1, 2, ...`. `term` must be smooth in real
    /// `k` and decay at least like `1/k²` once `ν_k > 2Ω`. The sum stops
    /// early when the terms become negligible; otherwise the remainder past
    /// a fixed number of explicit terms is approximated by the midpoint
    /// Euler-Maclaurin integral.
    pub(crate) fn sum<F: Fn(f64) -> f64>(&self, term: F) -> f64 {
        let regular = self.regular_index();
        let mut total = 0.0;
        let mut prev = f64::INFINITY;
        let mut k = 1usize;
        loop {
            let t = term(k as f64);
            total += t;
            if k > regular {
                // Beyond the regular index terms shrink monotonically; stop
                // once the geometric or algebraic tail bound is negligible.
                let ratio = (t / prev).abs();
                let bound = if ratio < 0.999 {
                    t.abs() * ratio / (1.0 - ratio)
                } else {
                    t.abs() * k as f64
                };
                if bound <= 1e-17 * total.abs() || bound == 0.0 {
                    return total;
                }
            }
            if k >= EXPLICIT_TERMS.max(regular + 1) {
                break;
            }
            prev = t;
            k += 1;
        }
        let q = QuadratureConfig {
            abs_tol: 1e-18,
            rel_tol: 1e-12,
            ..QuadratureConfig::default()
        };
        let tail = integrate_tail(&term, k as f64 + 0.5, Tail::Decaying, &q)
            .map(|e| e.value)
            .unwrap_or(0.0);
        total + tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_pole_coincidence() {
        let t = 0.5;
        let p = ModelParams::new(0.1, 2.0 * PI * t, t).unwrap();
        assert!(matches!(
            MatsubaraExpansion::new(&p),
            Err(Error::PoleCoincidence { index: 1, .. })
        ));
        let near = ModelParams::new(0.1, 2.0 * PI * t * (1.0 + 1e-4), t).unwrap();
        assert!(MatsubaraExpansion::new(&near).is_ok());
    }

    #[test]
    fn zero_temperature_is_rejected() {
        let p = ModelParams::new(0.1, 1.0, 0.0).unwrap();
        assert!(MatsubaraExpansion::new(&p).is_err());
    }

    #[test]
    fn tail_sum_matches_zeta() {
        // Σ 1/k³ = ζ(3), exercised through the Euler-Maclaurin tail.
        let p = ModelParams::new(0.1, 1.0, 1.0).unwrap();
        let m = MatsubaraExpansion::new(&p).unwrap();
        let s = m.sum(|k| 1.0 / (k * k * k));
        assert!((s - 1.202_056_903_159_594_3).abs() < 1e-13, "{s}");
    }
}
