// SPDX-License-Identifier: Apache-2.0

//! Adaptive Gauss-Kronrod quadrature on finite and semi-infinite ranges.
//!
//! Finite ranges use a globally adaptive 21-point Gauss-Kronrod scheme that
//! always bisects the panel with the largest error estimate. Semi-infinite
//! ranges are split at a truncation frequency: the head is handled by the
//! finite scheme, the tail either by the map `x = a / u` (monotone decay) or
//! by summing half-period segments and accelerating the partial sums with
//! Wynn's epsilon algorithm (oscillatory decay).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_291_000,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and panel layout for frequency integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Interior break points of the head interval.
    pub split_points: Vec<f64>,
    /// Frequency separating the adaptive head from the tail treatment.
    pub truncation: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200_000,
            split_points: vec![1.0],
            truncation: 50.0,
        }
    }
}

impl QuadratureConfig {
    /// Defaults adapted to a parameter set: break points at the system
    /// frequency and the cutoff, truncation at 50 times the largest scale.
    pub fn for_params(p: &ModelParams) -> Self {
        let mut split_points = vec![1.0, p.cutoff];
        split_points.sort_by(f64::total_cmp);
        split_points.dedup();
        Self {
            split_points,
            truncation: 50.0 * p.cutoff.max(p.temperature).max(1.0),
            ..Self::default()
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self.rel_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        if !(self.truncation > 0.0) {
            return Err(Error::InvalidParameter(
                "truncation must be positive".into(),
            ));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
            evaluations: self.evaluations + rhs.evaluations,
        }
    }
}

/// How the integrand behaves beyond the truncation frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Non-oscillatory decay at least as fast as `1/x^2`.
    Decaying,
    /// Oscillation `~ sin(frequency * x + phase)` times a slowly decaying envelope.
    Oscillatory { frequency: f64 },
    /// The integrand is identically zero beyond the truncation.
    None,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// Single 21-point Gauss-Kronrod panel.
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    Panel {
        a,
        b,
        value: res_k * half,
        error: rescale_error(
            (res_k - res_g) * half,
            res_abs * abs_half,
            res_asc * abs_half,
        ),
    }
}

/// Globally adaptive integration over `[a, b]` starting from the given
/// break points (points outside `(a, b)` are ignored).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut nodes: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in nodes.windows(2) {
        let panel = gauss_kronrod(&f, w[0], w[1]);
        value += panel.value;
        error += panel.error;
        heap.push(panel);
    }
    let mut evaluations = 21 * heap.len();
    let mut subdivisions = 0;
    while error > abs_tol.max(rel_tol * value.abs()) {
        if subdivisions >= max_subdivisions {
            return Err(Error::NoConvergence {
                subdivisions,
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel at the resolution limit of f64; keep it and accept.
            heap.push(worst);
            break;
        }
        let left = gauss_kronrod(&f, worst.a, mid);
        let right = gauss_kronrod(&f, mid, worst.b);
        evaluations += 42;
        subdivisions += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum periodically to stop drift from incremental updates.
        if subdivisions % 512 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    value = heap.iter().map(|p| p.value).sum();
    error = heap.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Adaptive integration over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    q: &QuadratureConfig,
) -> Result<Estimate> {
    integrate_with_breaks(
        f,
        a,
        b,
        &q.split_points,
        q.abs_tol,
        q.rel_tol,
        q.max_subdivisions,
    )
}

/// Wynn epsilon extrapolation of a sequence of partial sums. Returns the
/// latest extrapolated value together with the spread of the last two
/// even-column estimates.
fn wynn_epsilon(sums: &[f64]) -> (f64, f64) {
    let n = sums.len();
    if n < 3 {
        let last = *sums.last().unwrap_or(&0.0);
        return (last, f64::INFINITY);
    }
    // eps[k] holds column k of the epsilon table for the trailing entries.
    let mut prev: Vec<f64> = vec![0.0; n + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut best = *sums.last().unwrap();
    let mut best_prev = sums[n - 2];
    let mut column = 0usize;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            let base = prev.get(i + 1).copied().unwrap_or(0.0);
            if diff == 0.0 || !diff.is_finite() {
                next.push(f64::INFINITY);
            } else {
                next.push(base + 1.0 / diff);
            }
        }
        column += 1;
        prev = cur;
        cur = next;
        if column.is_multiple_of(2) {
            let k = cur.len();
            if k >= 2 && cur[k - 1].is_finite() && cur[k - 2].is_finite() {
                best = cur[k - 1];
                best_prev = cur[k - 2];
            } else {
                break;
            }
        }
    }
    (best, (best - best_prev).abs())
}

/// Integrates `f` over `[from, ∞)`.
pub fn integrate_tail<F: Fn(f64) -> f64>(
    f: F,
    from: f64,
    tail: Tail,
    q: &QuadratureConfig,
) -> Result<Estimate> {
    match tail {
        Tail::None => Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        }),
        Tail::Decaying => {
            let mapped = |u: f64| {
                if u <= 0.0 {
                    0.0
                } else {
                    let x = from / u;
                    f(x) * from / (u * u)
                }
            };
            integrate_with_breaks(
                mapped,
                0.0,
                1.0,
                &[],
                q.abs_tol,
                q.rel_tol,
                q.max_subdivisions,
            )
        }
        Tail::Oscillatory { frequency } => {
            let half_period = std::f64::consts::PI / frequency.abs();
            let segment_tol = 0.1 * q.abs_tol;
            let mut sums = Vec::new();
            let mut total = 0.0;
            let mut error = 0.0;
            let mut evaluations = 0;
            let mut last = f64::NAN;
            let mut stable = 0;
            for k in 0..400usize {
                let a = from + k as f64 * half_period;
                let seg = integrate_with_breaks(
                    &f,
                    a,
                    a + half_period,
                    &[],
                    segment_tol,
                    q.rel_tol,
                    q.max_subdivisions,
                )?;
                total += seg.value;
                error += seg.error;
                evaluations += seg.evaluations;
                sums.push(total);
                // The table stays small; older entries add nothing once converged.
                let window = &sums[sums.len().saturating_sub(40)..];
                let (extrapolated, spread) = wynn_epsilon(window);
                if k >= 6 {
                    let change = (extrapolated - last).abs();
                    let tol = q.target(extrapolated);
                    if change.max(spread) <= tol {
                        stable += 1;
                        if stable >= 2 {
                            return Ok(Estimate {
                                value: extrapolated,
                                error: error + change.max(spread),
                                evaluations,
                            });
                        }
                    } else {
                        stable = 0;
                    }
                }
                last = extrapolated;
            }
            Err(Error::NoConvergence {
                subdivisions: 400,
                estimate: last,
                error: f64::NAN,
            })
        }
    }
}

/// Integrates `f` over `[0, ∞)`: adaptive panels on `[0, truncation]` with
/// the configured split points, plus the tail treatment.
///
/// For oscillatory integrands the head is pre-split into panels spanning a
/// few periods so the adaptive scheme never has to discover the oscillation.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    q: &QuadratureConfig,
    tail: Tail,
) -> Result<Estimate> {
    q.validate()?;
    let cut = q.truncation;
    let mut breaks = q.split_points.clone();
    if let Tail::Oscillatory { frequency } = tail {
        let width = 4.0 * std::f64::consts::PI / frequency.abs();
        let n = (cut / width).ceil().min(1e6) as usize;
        breaks.extend((1..n).map(|i| i as f64 * cut / n as f64));
    }
    let head = integrate_with_breaks(
        &f,
        0.0,
        cut,
        &breaks,
        0.5 * q.abs_tol,
        q.rel_tol,
        q.max_subdivisions,
    )?;
    let tail_cfg = QuadratureConfig {
        abs_tol: 0.5 * q.abs_tol,
        ..q.clone()
    };
    let rest = integrate_tail(&f, cut, tail, &tail_cfg)?;
    Ok(head + rest)
}
