// SPDX-License-Identifier: Apache-2.0

//! Coefficients from the exponential decomposition of the noise kernel.
//!
//! With `D1(s) = Σ_j c_j e^{−ν_j s}` every time integral is elementary:
//!
//! ```text
//! ∫₀ᵗ e^{−νs} cos s ds = [ν − e^{−νt}(ν cos t − sin t)] / (ν² + 1)
//! ∫₀ᵗ e^{−νs} sin s ds = [1 − e^{−νt}(cos t + ν sin t)] / (ν² + 1)
//! ```
//!
//! so each coefficient is its stationary value plus an exponentially
//! damped transient sum.

use super::{coeff_bz, stationary_azz, stationary_bz, CoefficientSet};
use crate::bath::{dissipation_kernel, MatsubaraExpansion, ModelParams, OMEGA0};
use crate::error::{Error, Result};

/// Relative cutoff shift used to step around a Matsubara/Drude pole coincidence.
const POLE_SHIFT: f64 = 1e-4;

#[derive(Debug, Clone)]
enum Expansion {
    Single(MatsubaraExpansion),
    /// Symmetric pair at `Ω(1 ± δ)`, averaged; the coefficients are smooth in
    /// Ω, only the individual residues blow up at the coincidence.
    Straddle(Box<[MatsubaraExpansion; 2]>),
}

/// Matsubara-series evaluator for `a_yx(t)`, `a_zz(t)`, `b_z(t)` at `T > 0`.
#[derive(Debug, Clone)]
pub struct SeriesCoefficients {
    params: ModelParams,
    expansion: Expansion,
    stationary: CoefficientSet,
}

impl SeriesCoefficients {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let expansion = match MatsubaraExpansion::new(p) {
            Ok(e) => Expansion::Single(e),
            Err(Error::PoleCoincidence { .. }) => {
                let lo = ModelParams {
                    cutoff: p.cutoff * (1.0 - POLE_SHIFT),
                    ..*p
                };
                let hi = ModelParams {
                    cutoff: p.cutoff * (1.0 + POLE_SHIFT),
                    ..*p
                };
                Expansion::Straddle(Box::new([
                    MatsubaraExpansion::new(&lo)?,
                    MatsubaraExpansion::new(&hi)?,
                ]))
            }
            Err(e) => return Err(e),
        };
        let a_yx = match &expansion {
            Expansion::Single(e) => stationary_ayx_series(e),
            Expansion::Straddle(pair) => {
                0.5 * (stationary_ayx_series(&pair[0]) + stationary_ayx_series(&pair[1]))
            }
        };
        let stationary = CoefficientSet {
            t: f64::INFINITY,
            a_yx,
            a_zz: stationary_azz(p),
            b_z: stationary_bz(p),
        };
        Ok(Self {
            params: *p,
            expansion,
            stationary,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// True when the cutoff sits on a Matsubara frequency and the values
    /// come from the straddling average.
    pub fn pole_coincidence(&self) -> bool {
        matches!(self.expansion, Expansion::Straddle(_))
    }

    pub fn stationary(&self) -> CoefficientSet {
        self.stationary
    }

    /// Coefficients at time `t ≥ 0`.
    pub fn evaluate(&self, t: f64) -> CoefficientSet {
        if t <= 0.0 || self.params.gamma == 0.0 {
            return CoefficientSet::zero(t.max(0.0));
        }
        let (zz, yx) = match &self.expansion {
            Expansion::Single(e) => transients(e, t),
            Expansion::Straddle(pair) => {
                let (z0, y0) = transients(&pair[0], t);
                let (z1, y1) = transients(&pair[1], t);
                (0.5 * (z0 + z1), 0.5 * (y0 + y1))
            }
        };
        CoefficientSet {
            t,
            a_yx: self.stationary.a_yx - 0.5 * yx,
            a_zz: self.stationary.a_zz + 0.5 * zz,
            b_z: coeff_bz(t, &self.params),
        }
    }

    /// Noise kernel `D1(t)` for `t > 0`.
    pub fn noise_kernel(&self, t: f64) -> f64 {
        match &self.expansion {
            Expansion::Single(e) => e.noise_kernel(t),
            Expansion::Straddle(pair) => 0.5 * (pair[0].noise_kernel(t) + pair[1].noise_kernel(t)),
        }
    }

    /// Time derivatives `(a_yx', a_zz', b_z')` at `t > 0`.
    pub fn derivatives(&self, t: f64) -> [f64; 3] {
        let d1 = self.noise_kernel(t);
        let (s, c) = (OMEGA0 * t).sin_cos();
        [
            0.5 * d1 * s,
            -0.5 * d1 * c,
            -0.5 * dissipation_kernel(t, &self.params) * s,
        ]
    }
}

/// `Σ_j c_j e^{−ν_j t}(ν_j cos t − sin t)/(ν_j² + 1)` and
/// `Σ_j c_j e^{−ν_j t}(cos t + ν_j sin t)/(ν_j² + 1)`.
fn transients(e: &MatsubaraExpansion, t: f64) -> (f64, f64) {
    let (s, c) = (OMEGA0 * t).sin_cos();
    let cutoff = e.params().cutoff;
    let drude = e.drude_amplitude() * (-cutoff * t).exp() / (cutoff * cutoff + 1.0);
    let zz = drude * (cutoff * c - s)
        + e.sum(|k| {
            let nu = e.nu(k);
            e.amplitude(k) * (-nu * t).exp() * (nu * c - s) / (nu * nu + 1.0)
        });
    let yx = drude * (c + cutoff * s)
        + e.sum(|k| {
            let nu = e.nu(k);
            e.amplitude(k) * (-nu * t).exp() * (c + nu * s) / (nu * nu + 1.0)
        });
    (zz, yx)
}

/// `a_yx(∞) = ½ Σ_j c_j / (ν_j² + 1)`.
fn stationary_ayx_series(e: &MatsubaraExpansion) -> f64 {
    let cutoff = e.params().cutoff;
    let drude = e.drude_amplitude() / (cutoff * cutoff + 1.0);
    0.5 * (drude
        + e.sum(|k| {
            let nu = e.nu(k);
            e.amplitude(k) / (nu * nu + 1.0)
        }))
}

/// `a_zz(∞)` summed term by term; equals `−(π/2) J_eff(ω0)` and serves as a
/// consistency check of the expansion.
pub fn stationary_azz_series(p: &ModelParams) -> Result<f64> {
    let e = MatsubaraExpansion::new(p)?;
    let cutoff = p.cutoff;
    let drude = e.drude_amplitude() * cutoff / (cutoff * cutoff + 1.0);
    Ok(-0.5
        * (drude
            + e.sum(|k| {
                let nu = e.nu(k);
                e.amplitude(k) * nu / (nu * nu + 1.0)
            })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_azz_series_matches_closed_form() {
        for &(c, t) in &[(1.0, 1.0), (0.3, 0.2), (7.0, 2.5), (2.0, 0.05)] {
            let p = ModelParams::new(0.1, c, t).unwrap();
            let series = stationary_azz_series(&p).unwrap();
            let closed = stationary_azz(&p);
            assert!(
                (series - closed).abs() < 1e-11 * closed.abs().max(1.0),
                "{series} {closed}"
            );
        }
    }

    #[test]
    fn starts_at_zero_and_relaxes() {
        let p = ModelParams::new(0.1, 1.0, 1.0).unwrap();
        let s = SeriesCoefficients::new(&p).unwrap();
        let z = s.evaluate(0.0);
        assert_eq!(z.as_array(), [0.0; 3]);
        let late = s.evaluate(80.0);
        let st = s.stationary();
        for (a, b) in late.as_array().iter().zip(st.as_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_times_are_small() {
        let p = ModelParams::new(0.1, 2.0, 0.3).unwrap();
        let s = SeriesCoefficients::new(&p).unwrap();
        let v = s.evaluate(1e-9);
        assert!(v.a_zz.abs() < 1e-7 && v.a_yx.abs() < 1e-7, "{v:?}");
    }

    #[test]
    fn straddles_pole_coincidence() {
        let t = 0.5;
        let p = ModelParams::new(0.1, 2.0 * std::f64::consts::PI * t, t).unwrap();
        let s = SeriesCoefficients::new(&p).unwrap();
        assert!(s.pole_coincidence());
        let at = |f: f64| {
            let shifted = ModelParams::new(0.1, p.cutoff * f, t).unwrap();
            SeriesCoefficients::new(&shifted).unwrap().evaluate(2.0)
        };
        let (lo, hi) = (at(1.0 - 3e-3), at(1.0 + 3e-3));
        let a = s.evaluate(2.0);
        assert!((a.a_zz - 0.5 * (lo.a_zz + hi.a_zz)).abs() < 1e-6);
        assert!((a.a_yx - 0.5 * (lo.a_yx + hi.a_yx)).abs() < 1e-6);
    }
}
