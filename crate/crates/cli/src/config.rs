// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinboson::bath::{ModelParams, QuadratureConfig};
use spinboson::dynamics::IntegratorConfig;
use spinboson::sweep::{default_axis, ExportFormat};
use spinboson::tcl::RateMode;

use crate::CliError;

/// Fully resolved settings shared by all subcommands. Loaded from an optional
/// JSON file, then overridden by flags; echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub omega_c: f64,
    pub temperature: f64,
    pub gamma: f64,
    pub mode: RateMode,
    pub seed: u64,
    pub pairs: usize,
    pub workers: usize,
    pub integrator: IntegratorConfig,
    pub quadrature_abs_tol: f64,
    pub quadrature_rel_tol: f64,
    /// Sweep axes: `lo:hi:n` (linear below 2, logarithmic above) or a
    /// comma-separated list.
    pub omega_c_grid: String,
    pub temperature_grid: String,
    pub out: Option<PathBuf>,
    pub format: Option<ExportFormat>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            omega_c: 1.0,
            temperature: 1.0,
            gamma: 0.1,
            mode: RateMode::Tcl2,
            seed: 0,
            pairs: 500,
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            integrator: IntegratorConfig::default(),
            quadrature_abs_tol: q.abs_tol,
            quadrature_rel_tol: q.rel_tol,
            omega_c_grid: "0.2:10:30".into(),
            temperature_grid: "0.2:10:30".into(),
            out: None,
            format: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.gamma, self.omega_c, self.temperature).map_err(CliError::from_core)
    }

    pub fn quadrature(&self, p: &ModelParams) -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: self.quadrature_abs_tol,
            rel_tol: self.quadrature_rel_tol,
            ..QuadratureConfig::for_params(p)
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.integrator.validate().map_err(CliError::from_core)?;
        if !(self.quadrature_abs_tol > 0.0 && self.quadrature_rel_tol > 0.0) {
            return Err(CliError::Usage(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses `lo:hi:n` into the default mixed axis, or a comma-separated list.
pub fn parse_axis(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("bad grid '{spec}': {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| bad("hi is not a number"))?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| bad("n is not a count"))?;
        if n == 1 && lo == hi && lo > 0.0 {
            return Ok(vec![lo]);
        }
        return default_axis(lo, hi, n).map_err(|e| bad(&e.to_string()));
    }
    if parts.len() != 1 {
        return Err(bad("use lo:hi:n or a comma-separated list"));
    }
    spec.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad("list entry is not a number"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_forms() {
        assert_eq!(parse_axis("0.5,1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(parse_axis("0.2:10:30").unwrap().len(), 30);
        assert_eq!(parse_axis("3:3:1").unwrap(), vec![3.0]);
        assert!(parse_axis("1:2").is_err());
        assert!(parse_axis("a,b").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"omega_c": 2.0}"#).is_ok());
        assert!(serde_json::from_str::<RunConfig>(r#"{"omegac": 2.0}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"integrator": {"abs_tl": 1e-9}}"#).is_err());
    }
}
