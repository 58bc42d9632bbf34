// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde_json::{json, Value};
use spinboson::bath::{self, resonance_cutoff};
use spinboson::dynamics::{distance_series, BlochVector};
use spinboson::measure::{estimate_measure, MeasureOptions};
use spinboson::sweep::{
    minimum_locus, resonance_overlay, run_sweep, to_csv, to_json, CellStatus, ExportFormat,
    GridSpec, SweepOptions,
};
use spinboson::tcl::CoefficientTable;

use crate::config::{parse_axis, RunConfig};
use crate::output::{config_line, emit, render, Provenance, Table};
use crate::CliError;

fn format_of(cfg: &RunConfig, default: ExportFormat) -> ExportFormat {
    cfg.format.unwrap_or(default)
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

pub fn kernels(cfg: &RunConfig, s_max: Option<f64>, points: usize) -> Result<(), CliError> {
    cfg.validate()?;
    let p = cfg.params()?;
    let q = cfg.quadrature(&p);
    let s_max = s_max.unwrap_or(20.0 / p.cutoff);
    positive("s_max", s_max)?;
    if points == 0 {
        return Err(CliError::Usage("points must be at least 1".into()));
    }
    let mut table = Table::new(&["s", "D", "D1"]);
    for i in 1..=points {
        let s = s_max * i as f64 / points as f64;
        let d1 = bath::noise_kernel(s, &p, &q)?;
        table
            .rows
            .push(vec![s, bath::dissipation_kernel(s, &p), d1.value]);
    }
    let prov = Provenance::new("kernels", cfg, json!({ "s_max": s_max, "points": points }));
    emit(
        cfg,
        &render(&prov, &table, format_of(cfg, ExportFormat::Csv))?,
    )
}

pub fn coeffs(cfg: &RunConfig, t_max: f64, dt: f64) -> Result<(), CliError> {
    cfg.validate()?;
    positive("t_max", t_max)?;
    positive("dt", dt)?;
    let p = cfg.params()?;
    let q = cfg.quadrature(&p);
    let source = CoefficientTable::for_params(&p, &q)?;
    let mut table = Table::new(&["t", "a_yx", "a_zz", "b_z"]);
    let steps = (t_max / dt * (1.0 + 1e-12)).floor() as usize;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let c = source.direct(t)?;
        table.rows.push(vec![t, c.a_yx, c.a_zz, c.b_z]);
    }
    let st = source.stationary();
    table
        .trailer
        .push(vec![f64::INFINITY, st.a_yx, st.a_zz, st.b_z]);
    table.extra.insert(
        "stationary".into(),
        json!({ "a_yx": st.a_yx, "a_zz": st.a_zz, "b_z": st.b_z }),
    );
    let prov = Provenance::new("coeffs", cfg, json!({ "t_max": t_max, "dt": dt }));
    emit(
        cfg,
        &render(&prov, &table, format_of(cfg, ExportFormat::Csv))?,
    )
}

fn parse_pair(s: &str) -> Result<(BlochVector, BlochVector), CliError> {
    let (a, b) = s.split_once(',').ok_or_else(|| {
        CliError::Usage(format!(
            "pair '{s}' must be two states separated by a comma"
        ))
    })?;
    Ok((a.parse()?, b.parse()?))
}

pub fn trajectory(cfg: &RunConfig, pair: &str, t_end: f64) -> Result<(), CliError> {
    cfg.validate()?;
    positive("t_end", t_end)?;
    let (v1, v2) = parse_pair(pair)?;
    let p = cfg.params()?;
    let q = cfg.quadrature(&p);
    let table = CoefficientTable::for_params(&p, &q)?;
    let series = distance_series(v1, v2, t_end, &table, cfg.mode, &cfg.integrator)?;
    let mut out = Table::new(&["t", "x1", "y1", "z1", "x2", "y2", "z2", "D"]);
    for i in 0..series.times.len() {
        let (a, b) = (series.first[i], series.second[i]);
        out.rows.push(vec![
            series.times[i],
            a.x,
            a.y,
            a.z,
            b.x,
            b.y,
            b.z,
            series.distances[i],
        ]);
    }
    out.extra
        .insert("max_excess".into(), json!(series.max_excess));
    let options = json!({ "pair": [v1.to_string(), v2.to_string()], "t_end": t_end, "max_excess": series.max_excess });
    let prov = Provenance::new("trajectory", cfg, options);
    emit(
        cfg,
        &render(&prov, &out, format_of(cfg, ExportFormat::Csv))?,
    )
}

pub fn measure(cfg: &RunConfig, t_end: Option<f64>) -> Result<(), CliError> {
    cfg.validate()?;
    if let Some(t) = t_end {
        positive("t_end", t)?;
    }
    let p = cfg.params()?;
    let opts = MeasureOptions {
        n_pairs: cfg.pairs,
        seed: cfg.seed,
        t_end,
        workers: cfg.workers,
        integrator: cfg.integrator,
    };
    let est = estimate_measure(&p, cfg.mode, &opts)?;
    let prov = Provenance::new("measure", cfg, json!({ "t_end": t_end }));
    let text = match format_of(cfg, ExportFormat::Json) {
        ExportFormat::Json => {
            let doc =
                json!({ "provenance": prov, "estimate": est, "reported_value": est.floored() });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        ExportFormat::Csv => {
            let mut out = config_line(&prov)?;
            out.push_str(
                "omega_c,temperature,gamma,mode,n_pairs,seed,value,noise_floor,raw_value,t_end,horizon_capped,max_excess\n",
            );
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                est.omega_c,
                est.temperature,
                est.gamma,
                est.mode,
                est.n_pairs,
                est.seed,
                est.floored(),
                est.noise_floor,
                est.value,
                est.t_end,
                est.horizon_capped,
                est.max_excess
            ));
            out
        }
    };
    emit(cfg, &text)
}

pub fn sweep(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    locus_path: Option<&Path>,
    stop_after: Option<usize>,
) -> Result<(), CliError> {
    cfg.validate()?;
    let spec = GridSpec {
        omega_c_values: parse_axis(&cfg.omega_c_grid)?,
        temperature_values: parse_axis(&cfg.temperature_grid)?,
        gamma: cfg.gamma,
        mode: cfg.mode,
        n_pairs: cfg.pairs,
        base_seed: cfg.seed,
    };
    spec.validate()?;
    let opts = SweepOptions {
        workers: cfg.workers,
        batch: 16,
        stop_after,
    };
    let result = run_sweep(&spec, &cfg.integrator, checkpoint, &opts)?;
    let text = match format_of(cfg, ExportFormat::Csv) {
        ExportFormat::Csv => to_csv(&result)?,
        ExportFormat::Json => to_json(&result)? + "\n",
    };
    emit(cfg, &text)?;

    if let Some(path) = locus_path {
        let locus = minimum_locus(&result);
        let curve = resonance_overlay(&spec.temperature_values)?;
        let prov = Provenance::new("sweep-locus", cfg, Value::Null);
        let mut out = config_line(&prov)?;
        out.push_str("temperature,omega_min,omega_res\n");
        for (t, res) in curve {
            let min = locus
                .iter()
                .find(|p| p.temperature == t)
                .map(|p| p.omega_c.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{t},{min},{res}\n"));
        }
        std::fs::write(path, out)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    }

    let failed = result.count(CellStatus::Failed);
    let pending = result.count(CellStatus::Pending);
    if failed + pending > 0 {
        return Err(CliError::Partial(format!(
            "{} of {} cells completed ({failed} failed, {pending} pending)",
            result.count(CellStatus::Completed),
            result.cells.len()
        )));
    }
    Ok(())
}

pub fn resonance(cfg: &RunConfig, t_min: f64, t_max: f64, points: usize) -> Result<(), CliError> {
    positive("t_min", t_min)?;
    positive("t_max", t_max)?;
    if t_max < t_min || points == 0 || (points == 1 && t_max != t_min) {
        return Err(CliError::Usage(format!(
            "need t_min ≤ t_max and points ≥ 2 (or one point with t_min = t_max), got {t_min}, {t_max}, {points}"
        )));
    }
    let mut table = Table::new(&["temperature", "omega_res"]);
    for i in 0..points {
        let t = if points == 1 {
            t_min
        } else {
            t_min + (t_max - t_min) * i as f64 / (points - 1) as f64
        };
        table.rows.push(vec![t, resonance_cutoff(t)]);
    }
    let prov = Provenance::new(
        "resonance",
        cfg,
        json!({ "t_min": t_min, "t_max": t_max, "points": points }),
    );
    emit(
        cfg,
        &render(&prov, &table, format_of(cfg, ExportFormat::Csv))?,
    )
}
