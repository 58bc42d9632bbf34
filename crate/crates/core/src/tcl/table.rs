// SPDX-License-Identifier: Apache-2.0

use super::{coefficients_frequency_domain, stationary_coeffs, CoefficientSet, SeriesCoefficients};
use crate::bath::{
    dissipation_kernel, noise_kernel_quadrature, ModelParams, QuadratureConfig, OMEGA0,
};
use crate::error::{Error, Result};

/// Smallest graded node; below it the table interpolates linearly to zero.
const FIRST_NODE: f64 = 1e-9;
/// The graded region spans this many uniform steps.
const GRADED_STEPS: f64 = 32.0;
/// Largest uniform step relative to the fastest bath time scale.
const STEP_PER_RATE: f64 = 0.1;

/// Construction knobs for [`CoefficientTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct TableOptions {
    /// Grid end; chosen from the bath relaxation rates when `None`.
    pub t_max: Option<f64>,
    /// Minimum number of uniform grid points.
    pub n_points: usize,
    /// Return stationary values past `t_max` once relaxation is verified.
    pub relaxation: bool,
    /// Allowed midpoint interpolation error relative to each coefficient's scale.
    pub interpolation_tol: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            t_max: None,
            n_points: 2048,
            relaxation: true,
            interpolation_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Series(SeriesCoefficients),
    Frequency {
        params: ModelParams,
        quad: QuadratureConfig,
    },
    Constant(CoefficientSet),
}

impl Source {
    fn evaluate(&self, t: f64) -> Result<[f64; 3]> {
        match self {
            Source::Series(s) => Ok(s.evaluate(t).as_array()),
            Source::Frequency { params, quad } => {
                Ok(coefficients_frequency_domain(t, params, quad)?.as_array())
            }
            Source::Constant(c) => Ok(c.as_array()),
        }
    }

    fn derivatives(&self, t: f64) -> Result<[f64; 3]> {
        match self {
            Source::Series(s) => Ok(s.derivatives(t)),
            Source::Frequency { params, quad } => {
                let d1 = noise_kernel_quadrature(t, params, quad)?;
                let (s, c) = (OMEGA0 * t).sin_cos();
                Ok([
                    0.5 * d1 * s,
                    -0.5 * d1 * c,
                    -0.5 * dissipation_kernel(t, params) * s,
                ])
            }
            Source::Constant(_) => Ok([0.0; 3]),
        }
    }
}

/// Tabulated TCL2 coefficients with cubic Hermite interpolation.
///
/// Nodes are uniform except for a geometrically graded stretch near
/// `t = 0`, where the noise kernel's logarithmic singularity makes the
/// coefficients behave like `t ln t`. Node values and exact slopes come from
/// the Matsubara series (or from frequency quadrature at `T = 0`). A
/// finished table is immutable.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    params: ModelParams,
    times: Vec<f64>,
    values: Vec<[f64; 3]>,
    slopes: Vec<[f64; 3]>,
    stationary: CoefficientSet,
    step: f64,
    uniform_from: usize,
    relaxed: bool,
    source: Source,
}

/// Builds a table on `[0, t_max]` with at least `n_points` uniform nodes.
pub fn build_table(
    p: &ModelParams,
    t_max: f64,
    n_points: usize,
    q: &QuadratureConfig,
) -> Result<CoefficientTable> {
    CoefficientTable::build(
        p,
        q,
        &TableOptions {
            t_max: Some(t_max),
            n_points,
            ..TableOptions::default()
        },
    )
}

impl CoefficientTable {
    /// Table with automatic extent and resolution.
    pub fn for_params(p: &ModelParams, q: &QuadratureConfig) -> Result<Self> {
        Self::build(p, q, &TableOptions::default())
    }

    /// Default grid end: long enough for every exponential transient of the
    /// kernels (rates Ω and 2πT) to decay by `e^{−40}`.
    pub fn default_t_max(p: &ModelParams) -> f64 {
        let mut t_max = (50.0 / p.cutoff).max(50.0 / OMEGA0);
        if p.temperature > 0.0 {
            t_max = t_max.max(40.0 / (2.0 * std::f64::consts::PI * p.temperature));
        }
        t_max
    }

    pub fn build(p: &ModelParams, q: &QuadratureConfig, opts: &TableOptions) -> Result<Self> {
        p.validate()?;
        q.validate()?;
        let t_max = opts.t_max.unwrap_or_else(|| Self::default_t_max(p));
        if !(t_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        if opts.n_points < 16 {
            return Err(Error::InvalidParameter(format!(
                "table needs at least 16 points, got {}",
                opts.n_points
            )));
        }
        let (source, stationary) = if p.temperature > 0.0 {
            let series = SeriesCoefficients::new(p)?;
            let st = series.stationary();
            (Source::Series(series), st)
        } else {
            (
                Source::Frequency {
                    params: *p,
                    quad: q.clone(),
                },
                stationary_coeffs(p, q)?,
            )
        };

        let fastest = p
            .cutoff
            .max(2.0 * std::f64::consts::PI * p.temperature)
            .max(OMEGA0);
        let max_step = if opts.t_max.is_some() && opts.n_points > 0 {
            f64::INFINITY
        } else {
            STEP_PER_RATE / fastest
        };
        let intervals = ((opts.n_points - 1) as f64).max((t_max / max_step).ceil()) as usize;
        let step = t_max / intervals as f64;

        let graded_end = (GRADED_STEPS * step).min(0.125 * t_max);
        let ratio = GRADED_STEPS / (GRADED_STEPS - 1.0);
        let mut graded = Vec::new();
        let mut t = graded_end / ratio;
        while t > FIRST_NODE {
            graded.push(t);
            t /= ratio;
        }
        graded.reverse();
        let first_uniform = (graded_end / step).round() as usize;

        let mut times = Vec::with_capacity(1 + graded.len() + intervals);
        times.push(0.0);
        times.extend(graded);
        let uniform_from = times.len();
        times.extend((first_uniform..=intervals).map(|i| i as f64 * step));
        if let Some(last) = times.last_mut() {
            *last = t_max;
        }

        let mut values = Vec::with_capacity(times.len());
        let mut slopes = Vec::with_capacity(times.len());
        values.push([0.0; 3]);
        slopes.push([0.0; 3]);
        for &t in &times[1..] {
            values.push(source.evaluate(t)?);
            slopes.push(source.derivatives(t)?);
        }

        let scale = {
            let mut s = stationary.as_array().map(f64::abs);
            for v in &values {
                for c in 0..3 {
                    s[c] = s[c].max(v[c].abs());
                }
            }
            s
        };
        let last = values[values.len() - 1];
        let relaxed = opts.relaxation
            && (0..3)
                .all(|c| (last[c] - stationary.as_array()[c]).abs() <= 1e-9 * scale[c].max(1e-12));

        let table = Self {
            params: *p,
            times,
            values,
            slopes,
            stationary,
            step,
            uniform_from,
            relaxed,
            source,
        };
        table.check_midpoints(&scale, opts.interpolation_tol)?;
        Ok(table)
    }

    /// Table whose lookups always return `set`, in both rate modes. Used for
    /// controls such as the closed system (all zeros) or a Lindblad-form
    /// generator with constant rates.
    pub fn constant(p: &ModelParams, set: CoefficientSet, t_max: f64) -> Self {
        let v = set.as_array();
        Self {
            params: *p,
            times: vec![0.0, t_max],
            values: vec![v, v],
            slopes: vec![[0.0; 3]; 2],
            stationary: CoefficientSet::from_array(f64::INFINITY, v),
            step: t_max,
            uniform_from: 0,
            relaxed: true,
            source: Source::Constant(set),
        }
    }

    fn check_midpoints(&self, scale: &[f64; 3], tol: f64) -> Result<()> {
        let n = self.times.len() - 1;
        let stride = (n / 96).max(1);
        let mut intervals: Vec<usize> = (1..n).step_by(stride).collect();
        intervals.push(self.uniform_from.min(n - 1));
        for i in intervals {
            let t = 0.5 * (self.times[i] + self.times[i + 1]);
            let direct = self.source.evaluate(t)?;
            let interp = self.interpolate(t);
            for c in 0..3 {
                let err = (interp[c] - direct[c]).abs();
                let limit = tol * scale[c].max(1e-300);
                if err > limit {
                    return Err(Error::GridTooCoarse {
                        t,
                        error: err,
                        limit,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Stored node value.
    pub fn node(&self, i: usize) -> CoefficientSet {
        CoefficientSet::from_array(self.times[i], self.values[i])
    }

    pub fn stationary(&self) -> CoefficientSet {
        self.stationary
    }

    /// Whether the transients had decayed to the stationary values by `t_max`.
    pub fn relaxed(&self) -> bool {
        self.relaxed
    }

    /// Uniform grid spacing.
    pub fn step(&self) -> f64 {
        self.step
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.times.len();
        let start = self.times[self.uniform_from.min(n - 1)];
        if self.uniform_from < n && t >= start {
            let i = self.uniform_from + ((t - start) / self.step) as usize;
            let mut i = i.min(n - 2);
            while i > 0 && self.times[i] > t {
                i -= 1;
            }
            while i + 2 < n && self.times[i + 1] <= t {
                i += 1;
            }
            i
        } else {
            match self.times.binary_search_by(|x| x.total_cmp(&t)) {
                Ok(i) => i.min(n - 2),
                Err(i) => i.saturating_sub(1).min(n - 2),
            }
        }
    }

    fn interpolate(&self, t: f64) -> [f64; 3] {
        let i = self.locate(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (y0, y1) = (&self.values[i], &self.values[i + 1]);
        if t == t0 {
            return *y0;
        }
        if t == t1 {
            return *y1;
        }
        let h = t1 - t0;
        let s = (t - t0) / h;
        if i == 0 && !matches!(self.source, Source::Constant(_)) {
            // Slope is unbounded at t = 0.
            return std::array::from_fn(|c| y0[c] + s * (y1[c] - y0[c]));
        }
        let (m0, m1) = (&self.slopes[i], &self.slopes[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        std::array::from_fn(|c| h00 * y0[c] + h10 * h * m0[c] + h01 * y1[c] + h11 * h * m1[c])
    }

    /// Coefficients at time `t` as `[a_yx, a_zz, b_z]`.
    ///
    /// Past `t_max` a relaxed table returns the stationary set; otherwise the
    /// value is computed directly from the underlying expansion.
    pub fn lookup_array(&self, t: f64) -> [f64; 3] {
        if t <= 0.0 {
            return self.values[0];
        }
        if t > self.t_max() {
            if self.relaxed {
                return self.stationary.as_array();
            }
            return self
                .source
                .evaluate(t)
                .unwrap_or_else(|_| self.stationary.as_array());
        }
        self.interpolate(t)
    }

    pub fn lookup(&self, t: f64) -> CoefficientSet {
        CoefficientSet::from_array(t, self.lookup_array(t))
    }

    /// Direct evaluation bypassing interpolation.
    pub fn direct(&self, t: f64) -> Result<CoefficientSet> {
        Ok(CoefficientSet::from_array(t, self.source.evaluate(t)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (ModelParams, QuadratureConfig) {
        let p = ModelParams::new(0.1, 1.0, 1.0).unwrap();
        let q = QuadratureConfig::for_params(&p);
        (p, q)
    }

    #[test]
    fn nodes_are_reproduced_exactly() {
        let (p, q) = reference();
        let table = CoefficientTable::for_params(&p, &q).unwrap();
        for i in (0..table.len()).step_by(97) {
            let node = table.node(i);
            assert_eq!(table.lookup(node.t).as_array(), node.as_array());
            let direct = table.direct(node.t).unwrap();
            assert_eq!(direct.as_array(), node.as_array());
        }
        assert_eq!(table.node(0).as_array(), [0.0; 3]);
    }

    #[test]
    fn past_grid_end_returns_stationary() {
        let (p, q) = reference();
        let table = CoefficientTable::for_params(&p, &q).unwrap();
        assert!(table.relaxed());
        let late = table.lookup(table.t_max() * 3.0);
        assert_eq!(late.as_array(), table.stationary().as_array());
    }

    #[test]
    fn midpoints_match_direct_evaluation() {
        let (p, q) = reference();
        let table = CoefficientTable::for_params(&p, &q).unwrap();
        let scale = table.stationary().as_array().map(f64::abs);
        for i in 0..table.len() - 1 {
            let t = 0.5 * (table.times()[i] + table.times()[i + 1]);
            let direct = table.direct(t).unwrap().as_array();
            let interp = table.lookup_array(t);
            for c in 0..3 {
                assert!(
                    (direct[c] - interp[c]).abs() <= 1e-6 * scale[c],
                    "t={t} c={c}: {} vs {}",
                    direct[c],
                    interp[c]
                );
            }
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let p = ModelParams::new(0.1, 1.0, 0.05).unwrap();
        let q = QuadratureConfig::for_params(&p);
        let res = build_table(&p, 200.0, 16, &q);
        assert!(matches!(res, Err(Error::GridTooCoarse { .. })), "{res:?}");
    }

    #[test]
    fn too_few_points_is_invalid() {
        let (p, q) = reference();
        assert!(build_table(&p, 10.0, 8, &q).is_err());
    }

    #[test]
    fn constant_table_is_flat() {
        let (p, _) = reference();
        let set = CoefficientSet {
            t: 0.0,
            a_yx: 0.0,
            a_zz: -0.05,
            b_z: -0.02,
        };
        let table = CoefficientTable::constant(&p, set, 100.0);
        for t in [0.0, 1.0, 57.3, 1e4] {
            assert_eq!(table.lookup_array(t), set.as_array());
        }
    }
}
