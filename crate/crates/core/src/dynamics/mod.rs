// SPDX-License-Identifier: Apache-2.0

//! Bloch-vector propagation under `dv/dt = M(t) v + b(t)`.

pub mod ode;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bath::{ModelParams, OMEGA0};
use crate::error::{Error, Result};
use crate::tcl::{CoefficientTable, RateMode};
pub use ode::{StepControl, StepStats};

/// Slack allowed on `|v| ≤ 1` when constructing initial states.
const BALL_SLACK: f64 = 1e-12;

/// Bloch vector `v = Tr{σρ}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    /// Physical state; rejects `|v| > 1` and non-finite components.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        v.check_physical()?;
        Ok(v)
    }

    /// No physicality check; for propagated states.
    pub const fn from_array(a: [f64; 3]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
        }
    }

    pub const fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_physical(&self) -> bool {
        self.norm() <= 1.0 + BALL_SLACK
    }

    pub fn check_physical(&self) -> Result<()> {
        if !self.as_array().iter().all(|c| c.is_finite()) || !self.is_physical() {
            return Err(Error::InvalidParameter(format!(
                "Bloch vector ({}, {}, {}) lies outside the unit ball",
                self.x, self.y, self.z
            )));
        }
        Ok(())
    }

    pub fn neg(&self) -> Self {
        Self::from_array(self.as_array().map(|c| -c))
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.x, self.y, self.z)
    }
}

/// Accepts `+x`, `-y`, `z`, `0`, or `x:y:z` component triples.
impl FromStr for BlochVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let axis = |sign: f64, name: &str| -> Option<Self> {
            match name {
                "x" => Some(Self::from_array([sign, 0.0, 0.0])),
                "y" => Some(Self::from_array([0.0, sign, 0.0])),
                "z" => Some(Self::from_array([0.0, 0.0, sign])),
                _ => None,
            }
        };
        if s == "0" {
            return Ok(Self::default());
        }
        let named = match s.as_bytes().first() {
            Some(b'+') => axis(1.0, &s[1..]),
            Some(b'-') => axis(-1.0, &s[1..]),
            _ => axis(1.0, s),
        };
        if let Some(v) = named {
            return Ok(v);
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidParameter(format!(
                "cannot parse Bloch vector '{s}' (use +x, -z or x:y:z)"
            )));
        }
        let mut c = [0.0; 3];
        for (slot, p) in c.iter_mut().zip(&parts) {
            *slot = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad component '{p}' in '{s}'")))?;
        }
        Self::new(c[0], c[1], c[2])
    }
}

/// Trace distance `½|v1 − v2|`.
pub fn trace_distance(v1: &BlochVector, v2: &BlochVector) -> f64 {
    let d = [v1.x - v2.x, v1.y - v2.y, v1.z - v2.z];
    0.5 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Integrator tolerances and sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Output sampling interval.
    pub output_dt: f64,
    /// Allowed excess of `|v|` over 1 before a positivity warning.
    pub pos_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            max_step: 1.0,
            output_dt: 0.02 * 2.0 * std::f64::consts::PI / OMEGA0,
            pos_tol: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("max_step", self.max_step),
            ("output_dt", self.output_dt),
            ("pos_tol", self.pos_tol),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self.rel_tol = tol;
        self
    }

    fn step_control(&self) -> StepControl {
        StepControl {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_step: self.max_step,
        }
    }
}

/// Drift matrix and inhomogeneity at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    pub m: [[f64; 3]; 3],
    pub b: [f64; 3],
}

/// `[a_yx, a_zz, b_z]` at time `t` for the chosen mode.
#[inline]
pub fn rates(t: f64, table: &CoefficientTable, mode: RateMode) -> [f64; 3] {
    match mode {
        RateMode::Tcl2 => table.lookup_array(t),
        RateMode::Redfield => table.stationary().as_array(),
    }
}

pub fn drift(t: f64, table: &CoefficientTable, mode: RateMode) -> Drift {
    let [ayx, azz, bz] = rates(t, table, mode);
    Drift {
        m: [
            [0.0, -OMEGA0, 0.0],
            [OMEGA0 + ayx, azz, 0.0],
            [0.0, 0.0, azz],
        ],
        b: [0.0, 0.0, bz],
    }
}

#[inline]
fn bloch_rhs(r: [f64; 3], v: &[f64]) -> [f64; 3] {
    let [ayx, azz, bz] = r;
    [
        -OMEGA0 * v[1],
        (OMEGA0 + ayx) * v[0] + azz * v[1],
        azz * v[2] + bz,
    ]
}

fn check_horizon(t_end: f64, cfg: &IntegratorConfig) -> Result<()> {
    cfg.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    Ok(())
}

/// Sampled evolution of one Bloch vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochVector>,
    pub mode: RateMode,
    pub params: ModelParams,
    /// `max(|v(t)| − 1)` over the samples.
    pub max_excess: f64,
    pub pos_tol: f64,
    pub stats: StepStats,
}

impl Trajectory {
    /// True when `|v|` left the unit ball by more than `pos_tol`.
    pub fn positivity_violated(&self) -> bool {
        self.max_excess > self.pos_tol
    }
}

pub fn propagate(
    v0: BlochVector,
    t_end: f64,
    table: &CoefficientTable,
    mode: RateMode,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_horizon(t_end, cfg)?;
    v0.check_physical()?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    let stats = ode::integrate(
        |t, y: &[f64; 3]| bloch_rhs(rates(t, table, mode), y),
        0.0,
        v0.as_array(),
        t_end,
        cfg.output_dt,
        &cfg.step_control(),
        |t, y| {
            let v = BlochVector::from_array(*y);
            max_excess = max_excess.max(v.norm() - 1.0);
            times.push(t);
            states.push(v);
            true
        },
    )?;
    Ok(Trajectory {
        times,
        states,
        mode,
        params: *table.params(),
        max_excess,
        pos_tol: cfg.pos_tol,
        stats,
    })
}

/// Two trajectories on a shared grid and their trace distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSeries {
    pub times: Vec<f64>,
    pub first: Vec<BlochVector>,
    pub second: Vec<BlochVector>,
    pub distances: Vec<f64>,
    pub max_excess: f64,
    pub stats: StepStats,
}

/// Propagates both states as one six-dimensional system so that the samples
/// share step acceptance.
pub fn distance_series(
    v1: BlochVector,
    v2: BlochVector,
    t_end: f64,
    table: &CoefficientTable,
    mode: RateMode,
    cfg: &IntegratorConfig,
) -> Result<PairSeries> {
    check_horizon(t_end, cfg)?;
    v1.check_physical()?;
    v2.check_physical()?;
    let mut out = PairSeries {
        times: Vec::new(),
        first: Vec::new(),
        second: Vec::new(),
        distances: Vec::new(),
        max_excess: f64::NEG_INFINITY,
        stats: StepStats::default(),
    };
    let y0 = [v1.x, v1.y, v1.z, v2.x, v2.y, v2.z];
    out.stats = ode::integrate(
        |t, y: &[f64; 6]| {
            let r = rates(t, table, mode);
            let a = bloch_rhs(r, &y[..3]);
            let b = bloch_rhs(r, &y[3..]);
            [a[0], a[1], a[2], b[0], b[1], b[2]]
        },
        0.0,
        y0,
        t_end,
        cfg.output_dt,
        &cfg.step_control(),
        |t, y| {
            let a = BlochVector::from_array([y[0], y[1], y[2]]);
            let b = BlochVector::from_array([y[3], y[4], y[5]]);
            out.max_excess = out.max_excess.max(a.norm() - 1.0).max(b.norm() - 1.0);
            out.times.push(t);
            out.distances.push(trace_distance(&a, &b));
            out.first.push(a);
            out.second.push(b);
            true
        },
    )?;
    Ok(out)
}

/// Sampled fundamental solution of the homogeneous system `dw/dt = M(t) w`,
/// plus the particular solution `u` of the full system with `u(0) = 0`.
///
/// The z component decouples, so the propagator is a 2×2 block for `(x, y)`
/// plus a scalar for `z`. Any difference vector `w(t) = Φ(t) w(0)` follows
/// from it, which makes one integration serve every initial pair; states are
/// `v(t) = Φ(t) v(0) + (0, 0, u(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub times: Vec<f64>,
    /// Row-major `[φ_xx, φ_xy, φ_yx, φ_yy]` per sample.
    pub xy: Vec<[f64; 4]>,
    pub z: Vec<f64>,
    pub inhomogeneous: Vec<f64>,
    pub stats: StepStats,
}

impl Propagator {
    pub fn compute(
        t_end: f64,
        table: &CoefficientTable,
        mode: RateMode,
        cfg: &IntegratorConfig,
    ) -> Result<Self> {
        Self::compute_until(t_end, table, mode, cfg, |_, _| false)
    }

    /// Like [`Propagator::compute`], but stops after the first sample for
    /// which `done(t, Φ_xy)` holds.
    pub fn compute_until<S>(
        t_end: f64,
        table: &CoefficientTable,
        mode: RateMode,
        cfg: &IntegratorConfig,
        mut done: S,
    ) -> Result<Self>
    where
        S: FnMut(f64, &[f64; 4]) -> bool,
    {
        check_horizon(t_end, cfg)?;
        let mut out = Self {
            times: Vec::new(),
            xy: Vec::new(),
            z: Vec::new(),
            inhomogeneous: Vec::new(),
            stats: StepStats::default(),
        };
        // Columns of Φ stored as (φ_xx, φ_yx, φ_xy, φ_yy), then φ_z and u.
        out.stats = ode::integrate(
            |t, y: &[f64; 6]| {
                let [ayx, azz, bz] = rates(t, table, mode);
                let w = OMEGA0 + ayx;
                [
                    -OMEGA0 * y[1],
                    w * y[0] + azz * y[1],
                    -OMEGA0 * y[3],
                    w * y[2] + azz * y[3],
                    azz * y[4],
                    azz * y[5] + bz,
                ]
            },
            0.0,
            [1.0, 0.0, 0.0, 1.0, 1.0, 0.0],
            t_end,
            cfg.output_dt,
            &cfg.step_control(),
            |t, y| {
                let phi = [y[0], y[2], y[1], y[3]];
                out.times.push(t);
                out.xy.push(phi);
                out.z.push(y[4]);
                out.inhomogeneous.push(y[5]);
                !done(t, &phi)
            },
        )?;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// `Φ(t_i) w`.
    pub fn apply(&self, i: usize, w: [f64; 3]) -> [f64; 3] {
        let p = &self.xy[i];
        [
            p[0] * w[0] + p[1] * w[1],
            p[2] * w[0] + p[3] * w[1],
            self.z[i] * w[2],
        ]
    }

    /// State at sample `i` started from `v0`.
    pub fn state(&self, i: usize, v0: &BlochVector) -> BlochVector {
        let [x, y, z] = self.apply(i, v0.as_array());
        BlochVector::from_array([x, y, z + self.inhomogeneous[i]])
    }

    /// Trace distance at sample `i` of the pair started at `(v1, v2)`.
    pub fn distance(&self, i: usize, v1: &BlochVector, v2: &BlochVector) -> f64 {
        let w = self.apply(i, [v1.x - v2.x, v1.y - v2.y, v1.z - v2.z]);
        0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
    }

    /// Upper triangle of `ΦᵀΦ` per sample: `[g_xx, g_xy, g_yy, φ_z²]`.
    ///
    /// `|Φ w|² = g_xx w_x² + 2 g_xy w_x w_y + g_yy w_y² + φ_z² w_z²`.
    pub fn gram(&self) -> Vec<[f64; 4]> {
        self.xy
            .iter()
            .zip(&self.z)
            .map(|(p, z)| {
                [
                    p[0] * p[0] + p[2] * p[2],
                    p[0] * p[1] + p[2] * p[3],
                    p[1] * p[1] + p[3] * p[3],
                    z * z,
                ]
            })
            .collect()
    }
}
