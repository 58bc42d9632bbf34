// SPDX-License-Identifier: Apache-2.0

//! Information backflow and the Monte Carlo estimate of the trace-distance
//! measure `N = max_pairs Σ max(0, ΔD)`.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bath::{ModelParams, QuadratureConfig};
use crate::dynamics::{BlochVector, IntegratorConfig, Propagator};
use crate::error::{Error, Result};
use crate::tcl::{CoefficientSet, CoefficientTable, RateMode};

/// Distance below which the `±x` seed pair counts as relaxed.
pub const RELAXED_DISTANCE: f64 = 1e-4;
/// Horizon cap in units of the population relaxation time `1/|a_zz(∞)|`.
pub const HORIZON_CAP: f64 = 50.0;
/// Horizon when there is no dissipation at all.
const CLOSED_HORIZON: f64 = 100.0;

/// Initial pair of states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatePair {
    pub first: BlochVector,
    pub second: BlochVector,
}

impl StatePair {
    pub fn new(first: BlochVector, second: BlochVector) -> Result<Self> {
        first.check_physical()?;
        second.check_physical()?;
        Ok(Self { first, second })
    }

    pub fn antipodal(v: BlochVector) -> Self {
        Self {
            first: v,
            second: v.neg(),
        }
    }

    pub fn difference(&self) -> [f64; 3] {
        [
            self.first.x - self.second.x,
            self.first.y - self.second.y,
            self.first.z - self.second.z,
        ]
    }
}

/// Total positive variation `Σ max(0, D[i+1] − D[i])`.
pub fn backflow(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// Antipodal pure pairs along ±x, ±y, ±z and ±(x+y)/√2.
pub fn seed_pairs() -> Vec<StatePair> {
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0],
    ]
    .into_iter()
    .map(|a| StatePair::antipodal(BlochVector::from_array(a)))
    .collect()
}

fn uniform_ball(rng: &mut ChaCha8Rng) -> BlochVector {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= 1.0 {
            return BlochVector::from_array(v);
        }
    }
}

/// The seed pairs followed by `n` pairs drawn uniformly (by volume) from the
/// Bloch ball. A longer list with the same seed extends a shorter one.
pub fn sample_pairs(n: usize, seed: u64) -> Vec<StatePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = seed_pairs();
    pairs.reserve(n);
    for _ in 0..n {
        let first = uniform_ball(&mut rng);
        let second = uniform_ball(&mut rng);
        pairs.push(StatePair { first, second });
    }
    pairs
}

/// Options for [`estimate_measure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureOptions {
    /// Random pairs on top of the seed set.
    pub n_pairs: usize,
    pub seed: u64,
    /// Fixed horizon; chosen from the `±x` pair when `None`.
    pub t_end: Option<f64>,
    pub workers: usize,
    pub integrator: IntegratorConfig,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            n_pairs: 500,
            seed: 0,
            t_end: None,
            workers: 1,
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Estimate of the measure with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureEstimate {
    pub omega_c: f64,
    pub temperature: f64,
    pub gamma: f64,
    pub mode: RateMode,
    pub n_pairs: usize,
    pub seed: u64,
    /// Largest backflow over the evaluated pairs.
    pub value: f64,
    /// Largest backflow of the closed-system control on the same grid.
    pub noise_floor: f64,
    pub best_pair: StatePair,
    pub t_end: f64,
    /// True when the horizon hit the cap before the `±x` pair relaxed.
    pub horizon_capped: bool,
    /// Largest `|v| − 1` seen on the seed states.
    pub max_excess: f64,
    pub samples: usize,
}

impl MeasureEstimate {
    /// `value`, or 0 when it does not exceed the noise floor.
    pub fn floored(&self) -> f64 {
        if self.value <= self.noise_floor {
            0.0
        } else {
            self.value
        }
    }
}

/// Backflow of every pair under `prop`, in input order.
pub fn pair_backflows(prop: &Propagator, pairs: &[StatePair], workers: usize) -> Vec<f64> {
    let gram = prop.gram();
    let scan = |chunk: &[StatePair]| -> Vec<f64> {
        chunk
            .iter()
            .map(|p| gram_backflow(&gram, p.difference()))
            .collect()
    };
    let workers = workers.max(1).min(pairs.len().max(1));
    if workers == 1 {
        return scan(pairs);
    }
    let chunk = pairs.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .map(|c| s.spawn(move || scan(c)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("pair worker panicked"))
            .collect()
    })
}

fn gram_backflow(gram: &[[f64; 4]], w: [f64; 3]) -> f64 {
    let (xx, xy, yy, zz) = (w[0] * w[0], 2.0 * w[0] * w[1], w[1] * w[1], w[2] * w[2]);
    let mut total = 0.0;
    let mut prev = f64::NAN;
    for g in gram {
        let d = 0.5
            * (g[0] * xx + g[1] * xy + g[2] * yy + g[3] * zz)
                .max(0.0)
                .sqrt();
        if d > prev {
            total += d - prev;
        }
        prev = d;
    }
    total
}

/// Integration horizon cap `50/|a_zz(∞)|`.
pub fn horizon_cap(table: &CoefficientTable) -> f64 {
    let azz = table.stationary().a_zz.abs();
    if azz > 0.0 {
        HORIZON_CAP / azz
    } else {
        CLOSED_HORIZON
    }
}

/// Propagator up to the default horizon: the first sample at which the `±x`
/// pair is closer than [`RELAXED_DISTANCE`], capped by [`horizon_cap`].
pub fn relaxation_propagator(
    table: &CoefficientTable,
    mode: RateMode,
    cfg: &IntegratorConfig,
) -> Result<(Propagator, bool)> {
    let cap = horizon_cap(table);
    let mut relaxed = false;
    let prop = Propagator::compute_until(cap, table, mode, cfg, |_, phi| {
        // D(±x) = ½|Φ (2, 0)| = |first column|.
        relaxed = phi[0].hypot(phi[2]) < RELAXED_DISTANCE;
        relaxed
    })?;
    Ok((prop, !relaxed))
}

/// Closed-system control (all coefficients zero) on the horizon `t_end`.
pub fn control_propagator(
    params: &ModelParams,
    mode: RateMode,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Propagator> {
    let zero = CoefficientTable::constant(
        &params.with_gamma(0.0),
        CoefficientSet::zero(f64::INFINITY),
        t_end,
    );
    Propagator::compute(t_end, &zero, mode, cfg)
}

/// Largest `|v| − 1` over the seed states.
fn seed_excess(prop: &Propagator) -> f64 {
    let states: Vec<BlochVector> = seed_pairs()
        .iter()
        .flat_map(|p| [p.first, p.second])
        .collect();
    let mut excess = f64::NEG_INFINITY;
    for i in 0..prop.len() {
        for v in &states {
            excess = excess.max(prop.state(i, v).norm() - 1.0);
        }
    }
    excess
}

fn check_options(opts: &MeasureOptions) -> Result<()> {
    opts.integrator.validate()?;
    if let Some(t) = opts.t_end {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive, got {t}"
            )));
        }
    }
    Ok(())
}

/// Measure estimate over an explicit pair list on a prepared table.
pub fn estimate_pairs(
    table: &CoefficientTable,
    mode: RateMode,
    pairs: &[StatePair],
    opts: &MeasureOptions,
) -> Result<MeasureEstimate> {
    check_options(opts)?;
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one state pair is required".into(),
        ));
    }
    for p in pairs {
        p.first.check_physical()?;
        p.second.check_physical()?;
    }
    let cfg = &opts.integrator;
    let (prop, capped) = match opts.t_end {
        Some(t) => (Propagator::compute(t, table, mode, cfg)?, false),
        None => relaxation_propagator(table, mode, cfg)?,
    };
    let t_end = prop.t_end();
    let control = control_propagator(table.params(), mode, t_end, cfg)?;

    let flows = pair_backflows(&prop, pairs, opts.workers);
    let floors = pair_backflows(&control, pairs, opts.workers);
    let (best, value) =
        flows
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let noise_floor = floors.iter().copied().fold(0.0, f64::max);
    let p = table.params();
    Ok(MeasureEstimate {
        omega_c: p.cutoff,
        temperature: p.temperature,
        gamma: p.gamma,
        mode,
        n_pairs: opts.n_pairs,
        seed: opts.seed,
        value,
        noise_floor,
        best_pair: pairs[best],
        t_end,
        horizon_capped: capped,
        max_excess: seed_excess(&prop),
        samples: prop.len(),
    })
}

/// Builds the coefficient table for `p` and estimates the measure over the
/// seed pairs plus `opts.n_pairs` random pairs.
pub fn estimate_measure(
    p: &ModelParams,
    mode: RateMode,
    opts: &MeasureOptions,
) -> Result<MeasureEstimate> {
    p.validate()?;
    let q = QuadratureConfig::for_params(p);
    let table = match mode {
        RateMode::Tcl2 => CoefficientTable::for_params(p, &q)?,
        RateMode::Redfield => {
            let st = crate::tcl::SeriesCoefficients::new(p)
                .map(|s| s.stationary())
                .or_else(|_| crate::tcl::stationary_coeffs(p, &q))?;
            CoefficientTable::constant(p, st, 1.0)
        }
    };
    estimate_with_table(&table, mode, opts)
}

/// [`estimate_measure`] on an existing table.
pub fn estimate_with_table(
    table: &CoefficientTable,
    mode: RateMode,
    opts: &MeasureOptions,
) -> Result<MeasureEstimate> {
    let pairs = sample_pairs(opts.n_pairs, opts.seed);
    estimate_pairs(table, mode, &pairs, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backflow_examples() {
        assert_eq!(backflow(&[1.0, 0.8, 0.5, 0.1]), 0.0);
        assert!((backflow(&[1.0, 0.6, 0.8, 0.3, 0.4]) - 0.3).abs() < 1e-15);
        assert_eq!(backflow(&[0.5]), 0.0);
        let n = 20000;
        let s: Vec<f64> = (0..=n)
            .map(|i| {
                (2.0 * std::f64::consts::PI * i as f64 / n as f64)
                    .sin()
                    .abs()
            })
            .collect();
        assert!((backflow(&s) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn gram_backflow_matches_series() {
        let gram: Vec<[f64; 4]> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.3;
                let a = (-0.05 * t).exp();
                [a * (1.0 + 0.2 * t.sin()), 0.1 * t.cos(), a, a * a]
            })
            .collect();
        let w = [0.3, -0.4, 0.5];
        let series: Vec<f64> = gram
            .iter()
            .map(|g| {
                0.5 * (g[0] * w[0] * w[0]
                    + 2.0 * g[1] * w[0] * w[1]
                    + g[2] * w[1] * w[1]
                    + g[3] * w[2] * w[2])
                    .sqrt()
            })
            .collect();
        assert!((gram_backflow(&gram, w) - backflow(&series)).abs() < 1e-14);
    }

    #[test]
    fn seed_pairs_are_pure_and_antipodal() {
        for p in seed_pairs() {
            assert!((p.first.norm() - 1.0).abs() < 1e-15);
            assert_eq!(p.second, p.first.neg());
        }
    }

    #[test]
    fn samples_are_reproducible_and_nested() {
        let a = sample_pairs(50, 9);
        assert_eq!(a, sample_pairs(50, 9));
        assert_ne!(a, sample_pairs(50, 10));
        assert_eq!(a.len(), 54);
        assert_eq!(&sample_pairs(80, 9)[..54], &a[..]);
    }
}
