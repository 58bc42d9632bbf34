// SPDX-License-Identifier: Apache-2.0

//! Parallel `(Ω, T)` sweeps of the measure with checkpoint/resume, the
//! per-temperature minimum locus and the analytic resonance overlay.

mod export;

use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use crate::bath::{resonance_cutoff, ModelParams, QuadratureConfig};
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::measure::{self, MeasureOptions, HORIZON_CAP, RELAXED_DISTANCE};
use crate::tcl::RateMode;

pub use export::{
    export, from_csv, from_json, import, read_checkpoint, to_csv, to_json, write_checkpoint,
    ExportFormat,
};

/// Boundary between the linear and logarithmic parts of the default axes.
pub const AXIS_BREAK: f64 = 2.0;

/// Axis with `n / 2` linear points on `[lo, AXIS_BREAK)` and the rest
/// logarithmic on `[AXIS_BREAK, hi]`; purely logarithmic when `lo ≥ AXIS_BREAK`
/// and purely linear when `hi ≤ AXIS_BREAK`.
pub fn default_axis(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(Error::InvalidParameter(format!(
            "axis needs 0 < lo < hi and n ≥ 2, got lo={lo} hi={hi} n={n}"
        )));
    }
    let linear = |a: f64, b: f64, m: usize, closed: bool| -> Vec<f64> {
        let div = if closed { m - 1 } else { m } as f64;
        (0..m).map(|i| a + (b - a) * i as f64 / div).collect()
    };
    let log = |a: f64, b: f64, m: usize| -> Vec<f64> {
        (0..m)
            .map(|j| {
                if j + 1 == m {
                    b
                } else {
                    a * (b / a).powf(j as f64 / (m - 1) as f64)
                }
            })
            .collect()
    };
    if hi <= AXIS_BREAK {
        return Ok(linear(lo, hi, n, true));
    }
    if lo >= AXIS_BREAK {
        return Ok(log(lo, hi, n));
    }
    let n_lin = (n / 2).max(1);
    let n_log = n - n_lin;
    if n_log < 2 {
        return Ok(linear(lo, hi, n, true));
    }
    let mut axis = linear(lo, AXIS_BREAK, n_lin, false);
    axis.extend(log(AXIS_BREAK, hi, n_log));
    Ok(axis)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sweep definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub omega_c_values: Vec<f64>,
    pub temperature_values: Vec<f64>,
    pub gamma: f64,
    pub mode: RateMode,
    pub n_pairs: usize,
    pub base_seed: u64,
}

impl GridSpec {
    /// 30×30 grid over `[0.2, 10]²` at γ = 0.1 with 500 pairs per cell.
    pub fn desk_default(mode: RateMode, base_seed: u64) -> Self {
        let axis = default_axis(0.2, 10.0, 30).expect("valid default axis");
        Self {
            omega_c_values: axis.clone(),
            temperature_values: axis,
            gamma: 0.1,
            mode,
            n_pairs: 500,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("omega_c", &self.omega_c_values),
            ("temperature", &self.temperature_values),
        ] {
            if axis.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} axis is empty")));
            }
            if !axis.iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} values must be positive"
                )));
            }
            if !axis.windows(2).all(|w| w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "{name} values must be strictly increasing"
                )));
            }
        }
        ModelParams::new(
            self.gamma,
            self.omega_c_values[0],
            self.temperature_values[0],
        )?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.omega_c_values.len() * self.temperature_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(Ω, T)` of cell `index`; cells run over Ω fastest.
    pub fn cell(&self, index: usize) -> (f64, f64) {
        let n = self.omega_c_values.len();
        (
            self.omega_c_values[index % n],
            self.temperature_values[index / n],
        )
    }

    /// Per-cell seed; depends only on the base seed and the cell index.
    pub fn cell_seed(&self, index: usize) -> u64 {
        splitmix64(self.base_seed ^ splitmix64(index as u64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Pending,
    Completed,
    Failed,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Pending => "pending",
            CellStatus::Completed => "completed",
            CellStatus::Failed => "failed",
        }
    }
}

/// One grid cell. `value` is the raw maximum backflow; exports also carry the
/// floored value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    pub omega_c: f64,
    pub temperature: f64,
    pub seed: u64,
    pub status: CellStatus,
    pub value: Option<f64>,
    pub noise_floor: Option<f64>,
    pub t_end: Option<f64>,
    pub max_excess: Option<f64>,
    pub diagnostic: Option<String>,
}

impl CellRecord {
    fn pending(omega_c: f64, temperature: f64, seed: u64) -> Self {
        Self {
            omega_c,
            temperature,
            seed,
            status: CellStatus::Pending,
            value: None,
            noise_floor: None,
            t_end: None,
            max_excess: None,
            diagnostic: None,
        }
    }

    /// Value with everything at or below the noise floor reported as 0.
    pub fn floored(&self) -> Option<f64> {
        match (self.value, self.noise_floor) {
            (Some(v), Some(f)) if v <= f => Some(0.0),
            (v, _) => v,
        }
    }
}

/// Provenance stored next to the cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepMetadata {
    pub code_version: String,
    pub integrator: IntegratorConfig,
    pub quadrature_abs_tol: f64,
    pub quadrature_rel_tol: f64,
    pub relaxed_distance: f64,
    pub horizon_cap: f64,
}

impl SweepMetadata {
    pub fn new(cfg: &IntegratorConfig) -> Self {
        let q = QuadratureConfig::default();
        Self {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            integrator: *cfg,
            quadrature_abs_tol: q.abs_tol,
            quadrature_rel_tol: q.rel_tol,
            relaxed_distance: RELAXED_DISTANCE,
            horizon_cap: HORIZON_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepResult {
    pub spec: GridSpec,
    pub metadata: SweepMetadata,
    pub cells: Vec<CellRecord>,
}

impl SweepResult {
    /// All cells pending.
    pub fn new(spec: GridSpec, cfg: &IntegratorConfig) -> Result<Self> {
        spec.validate()?;
        cfg.validate()?;
        let cells = (0..spec.len())
            .map(|i| {
                let (o, t) = spec.cell(i);
                CellRecord::pending(o, t, spec.cell_seed(i))
            })
            .collect();
        Ok(Self {
            metadata: SweepMetadata::new(cfg),
            spec,
            cells,
        })
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.cells.iter().filter(|c| c.status == status).count()
    }

    pub fn is_complete(&self) -> bool {
        self.count(CellStatus::Completed) == self.cells.len()
    }

    /// Cells of the temperature row `j`, ordered by Ω.
    pub fn row(&self, j: usize) -> &[CellRecord] {
        let n = self.spec.omega_c_values.len();
        &self.cells[j * n..(j + 1) * n]
    }

    /// Raw value of cell `(i_Ω, j_T)` if completed.
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let c = &self.row(j)[i];
        (c.status == CellStatus::Completed)
            .then_some(c.value)
            .flatten()
    }
}

/// Execution knobs for [`run_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub workers: usize,
    /// Completed cells between checkpoint writes.
    pub batch: usize,
    /// Stop dispatching after this many newly finished cells (simulated
    /// interruption); pending cells stay pending.
    pub stop_after: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            batch: 16,
            stop_after: None,
        }
    }
}

/// Measure estimate for one cell, as the sweep computes it.
pub fn evaluate_cell(spec: &GridSpec, index: usize, cfg: &IntegratorConfig) -> CellRecord {
    let (omega_c, temperature) = spec.cell(index);
    let seed = spec.cell_seed(index);
    let mut record = CellRecord::pending(omega_c, temperature, seed);
    let opts = MeasureOptions {
        n_pairs: spec.n_pairs,
        seed,
        t_end: None,
        workers: 1,
        integrator: *cfg,
    };
    let outcome = ModelParams::new(spec.gamma, omega_c, temperature)
        .and_then(|p| measure::estimate_measure(&p, spec.mode, &opts));
    match outcome {
        Ok(est) => {
            record.status = CellStatus::Completed;
            record.value = Some(est.value);
            record.noise_floor = Some(est.noise_floor);
            record.t_end = Some(est.t_end);
            record.max_excess = Some(est.max_excess);
            if est.horizon_capped {
                record.diagnostic = Some("horizon capped before relaxation".into());
            }
        }
        Err(e) => {
            record.status = CellStatus::Failed;
            record.diagnostic = Some(e.to_string());
        }
    }
    record
}

/// Runs (or resumes) a sweep. With a checkpoint path, an existing file is
/// loaded and only its pending cells are computed; progress is written back
/// atomically every `opts.batch` cells and at the end.
pub fn run_sweep(
    spec: &GridSpec,
    cfg: &IntegratorConfig,
    checkpoint: Option<&Path>,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let fresh = SweepResult::new(spec.clone(), cfg)?;
    let mut result = match checkpoint {
        Some(path) if path.exists() => {
            let loaded = read_checkpoint(path)?;
            if loaded.spec != fresh.spec
                || loaded.metadata != fresh.metadata
                || loaded.cells.len() != fresh.cells.len()
            {
                return Err(Error::CheckpointCorrupt {
                    path: path.to_path_buf(),
                    reason: "checkpoint was written for a different sweep configuration".into(),
                });
            }
            loaded
        }
        _ => fresh,
    };

    let pending: Vec<usize> = (0..result.cells.len())
        .filter(|&i| result.cells[i].status == CellStatus::Pending)
        .collect();
    if pending.is_empty() {
        return Ok(result);
    }
    let workers = opts.workers.max(1).min(pending.len());
    let batch = opts.batch.max(1);
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, CellRecord)>();

    std::thread::scope(|s| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, pending) = (&next, &stop, &pending);
            s.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&index) = pending.get(k) else { break };
                let record = evaluate_cell(spec, index, cfg);
                if tx.send((index, record)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut done = 0usize;
        for (index, record) in rx {
            result.cells[index] = record;
            done += 1;
            if opts.stop_after.is_some_and(|n| done >= n) {
                stop.store(true, Ordering::SeqCst);
            }
            if done.is_multiple_of(batch) {
                if let Some(path) = checkpoint {
                    write_checkpoint(&result, path)?;
                }
            }
        }
        Ok(())
    })?;
    if let Some(path) = checkpoint {
        write_checkpoint(&result, path)?;
    }
    Ok(result)
}

/// One point of the minimum locus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusPoint {
    pub temperature: f64,
    pub omega_c: f64,
}

/// Per-temperature cutoff that minimises the raw measure, for rows whose
/// minimum is interior and strictly below both edge values. Rows with fewer
/// than three cutoffs or unfinished cells are skipped.
pub fn minimum_locus(result: &SweepResult) -> Vec<LocusPoint> {
    let n = result.spec.omega_c_values.len();
    if n < 3 {
        return Vec::new();
    }
    let mut locus = Vec::new();
    for (j, &temperature) in result.spec.temperature_values.iter().enumerate() {
        let row: Option<Vec<f64>> = (0..n).map(|i| result.value(i, j)).collect();
        let Some(row) = row else { continue };
        if let Some(i) = interior_minimum(&row) {
            locus.push(LocusPoint {
                temperature,
                omega_c: result.spec.omega_c_values[i],
            });
        }
    }
    locus
}

/// Index of the first minimum when it is interior and strictly below both
/// ends.
pub fn interior_minimum(row: &[f64]) -> Option<usize> {
    let n = row.len();
    if n < 3 {
        return None;
    }
    let (i, &min) =
        row.iter().enumerate().fold(
            (0, &f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    (i > 0 && i + 1 < n && min < row[0] && min < row[n - 1]).then_some(i)
}

/// `(T, Ω_res(T))` for the analytic resonance curve.
pub fn resonance_overlay(temperatures: &[f64]) -> Result<Vec<(f64, f64)>> {
    temperatures
        .iter()
        .map(|&t| {
            if t > 0.0 && t.is_finite() {
                Ok((t, resonance_cutoff(t)))
            } else {
                Err(Error::InvalidParameter(format!(
                    "temperature must be positive, got {t}"
                )))
            }
        })
        .collect()
}

/// Width of the axis interval containing `x` (the nearest end interval when
/// `x` lies outside).
pub fn local_spacing(axis: &[f64], x: f64) -> f64 {
    if axis.len() < 2 {
        return f64::INFINITY;
    }
    let i = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1);
    axis[i] - axis[i - 1]
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` for fewer
/// than two points or a constant input.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Spearman correlation of raw values over cells completed in both sweeps.
pub fn sweep_correlation(a: &SweepResult, b: &SweepResult) -> Option<f64> {
    if a.spec.omega_c_values != b.spec.omega_c_values
        || a.spec.temperature_values != b.spec.temperature_values
    {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .cells
        .iter()
        .zip(&b.cells)
        .filter(|(p, q)| p.status == CellStatus::Completed && q.status == CellStatus::Completed)
        .filter_map(|(p, q)| Some((p.value?, q.value?)))
        .unzip();
    spearman(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_axis_shape() {
        let a = default_axis(0.2, 10.0, 30).unwrap();
        assert_eq!(a.len(), 30);
        assert_eq!(a[0], 0.2);
        assert_eq!(a[29], 10.0);
        assert!(a.windows(2).all(|w| w[1] > w[0]));
        let lin: Vec<f64> = a.iter().copied().filter(|&x| x < AXIS_BREAK).collect();
        assert_eq!(lin.len(), 15);
        assert!(lin
            .windows(3)
            .all(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs() < 1e-12));
        let log: Vec<f64> = a.iter().copied().filter(|&x| x >= AXIS_BREAK).collect();
        assert_eq!(log[0], AXIS_BREAK);
        assert!(log
            .windows(3)
            .all(|w| (w[2] / w[1] - w[1] / w[0]).abs() < 1e-12));
        assert_eq!(default_axis(0.5, 1.5, 3).unwrap(), vec![0.5, 1.0, 1.5]);
        assert!(default_axis(1.0, 0.5, 3).is_err());
    }

    #[test]
    fn cell_seeds_are_distinct() {
        let spec = GridSpec::desk_default(RateMode::Tcl2, 1);
        let mut seeds: Vec<u64> = (0..spec.len()).map(|i| spec.cell_seed(i)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), spec.len());
    }

    #[test]
    fn interior_minimum_rules() {
        assert_eq!(interior_minimum(&[3.0, 1.0, 2.0]), Some(1));
        assert_eq!(interior_minimum(&[1.0, 2.0, 3.0]), None);
        assert_eq!(interior_minimum(&[3.0, 2.0, 1.0]), None);
        assert_eq!(interior_minimum(&[1.0, 0.5, 0.5, 1.0]), Some(1));
        assert_eq!(interior_minimum(&[0.0, 0.0, 0.0]), None);
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert!(
            (spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12
        );
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(ranks(&[5.0, 1.0, 5.0, 0.0]), vec![3.5, 2.0, 3.5, 1.0]);
    }

    #[test]
    fn local_spacing_examples() {
        let axis = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(local_spacing(&axis, 3.0), 2.0);
        assert_eq!(local_spacing(&axis, 0.5), 1.0);
        assert_eq!(local_spacing(&axis, 9.0), 4.0);
    }
}
