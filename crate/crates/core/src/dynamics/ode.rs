// SPDX-License-Identifier: Apache-2.0

//! Dormand–Prince 5(4) with the fourth-order continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size controls shared by every propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
}

/// Counters reported after an integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` and calls `observe(t, y)` at
/// `t0 + k·dt` for every `k` with the sample inside the interval, always
/// including `t_end` as the last sample. Samples between step endpoints come
/// from the continuous extension. Integration stops early once `observe`
/// returns `false`.
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    dt: f64,
    ctl: &StepControl,
    mut observe: O,
) -> Result<StepStats>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]) -> bool,
{
    if !(t_end > t0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "integration needs t_end > t0 and dt > 0, got t0={t0} t_end={t_end} dt={dt}"
        )));
    }
    let mut stats = StepStats::default();
    let span = t_end - t0;
    let slack = 1e-12 * t_end.abs().max(1.0);
    // Grid samples strictly before t_end, then t_end itself.
    let inner = ((span - slack) / dt).floor() as usize + 1;
    let total = inner + 1;
    let sample_time = |k: usize| if k < inner { t0 + k as f64 * dt } else { t_end };
    let mut next = 0usize;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;

    let norm = |e: &[f64; N], a: &[f64; N], b: &[f64; N]| {
        let mut s = 0.0;
        for i in 0..N {
            let sk = ctl.abs_tol + ctl.rel_tol * a[i].abs().max(b[i].abs());
            s += (e[i] / sk).powi(2);
        }
        (s / N as f64).sqrt()
    };

    // Initial step from the Hairer heuristic.
    let mut h = {
        let scale: [f64; N] = std::array::from_fn(|i| ctl.abs_tol + ctl.rel_tol * y[i].abs());
        let d0 = (y
            .iter()
            .zip(&scale)
            .map(|(v, s)| (v / s).powi(2))
            .sum::<f64>()
            / N as f64)
            .sqrt();
        let d1 = (k1
            .iter()
            .zip(&scale)
            .map(|(v, s)| (v / s).powi(2))
            .sum::<f64>()
            / N as f64)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0.min(ctl.max_step).min(span)
    };

    if !observe(t0, &y) {
        return Ok(stats);
    }
    next += 1;

    let mut last_rejected = false;
    while t < t_end {
        let final_step = t + h >= t_end - slack;
        if final_step {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepFailure { t, h });
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);
        stats.evaluations += 6;

        let err_vec: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let err = norm(&err_vec, &y, &y_new);
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        if err > 1.0 {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
            continue;
        }
        stats.accepted += 1;

        let t_new = if final_step { t_end } else { t + h };
        if next < total && sample_time(next) <= t_new {
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let r4: [f64; N] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            while next < total && sample_time(next) <= t_new {
                let ts = sample_time(next);
                let go_on = if ts >= t_end || ts == t_new {
                    observe(ts, &y_new)
                } else {
                    let th = (ts - t) / h;
                    let th1 = 1.0 - th;
                    let ys: [f64; N] = std::array::from_fn(|i| {
                        y[i] + th * (ydiff[i] + th1 * (bspl[i] + th * (r4[i] + th1 * r5[i])))
                    });
                    observe(ts, &ys)
                };
                next += 1;
                if !go_on {
                    return Ok(stats);
                }
            }
        }

        t = t_new;
        y = y_new;
        k1 = k7;
        let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
        fac = fac.clamp(0.2, 10.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h = (h * fac).min(ctl.max_step);
    }
    Ok(stats)
}
