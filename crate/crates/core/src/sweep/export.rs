// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CellRecord, CellStatus, GridSpec, SweepMetadata, SweepResult};
use crate::error::{Error, Result};

/// Prefix of the provenance line at the top of CSV exports.
const CSV_HEADER_PREFIX: &str = "# sweep: ";

const COLUMNS: [&str; 12] = [
    "omega_c",
    "temperature",
    "gamma",
    "mode",
    "value",
    "noise_floor",
    "status",
    "raw_value",
    "t_end",
    "max_excess",
    "seed",
    "diagnostic",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        })
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown format '{other}' (csv or json)"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CsvProvenance {
    spec: GridSpec,
    metadata: SweepMetadata,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long-format CSV, one row per cell, below a one-line JSON provenance
/// comment. Pending cells have empty value fields.
pub fn to_csv(result: &SweepResult) -> Result<String> {
    let provenance = CsvProvenance {
        spec: result.spec.clone(),
        metadata: result.metadata.clone(),
    };
    let mut out = format!(
        "{CSV_HEADER_PREFIX}{}\n",
        serde_json::to_string(&provenance)?
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
    w.write_record(COLUMNS).map_err(csv_err)?;
    let gamma = result.spec.gamma.to_string();
    let mode = result.spec.mode.to_string();
    for c in &result.cells {
        w.write_record([
            c.omega_c.to_string(),
            c.temperature.to_string(),
            gamma.clone(),
            mode.clone(),
            opt(c.floored()),
            opt(c.noise_floor),
            c.status.as_str().to_string(),
            opt(c.value),
            opt(c.t_end),
            opt(c.max_excess),
            c.seed.to_string(),
            c.diagnostic.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

fn parse_err(reason: impl Into<String>) -> Error {
    Error::InvalidParameter(format!("malformed sweep CSV: {}", reason.into()))
}

fn parse_opt(s: &str, column: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| parse_err(format!("bad number '{s}' in column {column}")))
}

pub fn from_csv(text: &str) -> Result<SweepResult> {
    let (first, rest) = text
        .split_once('\n')
        .ok_or_else(|| parse_err("missing provenance line"))?;
    let json = first
        .strip_prefix(CSV_HEADER_PREFIX)
        .ok_or_else(|| parse_err("missing provenance line"))?;
    let provenance: CsvProvenance = serde_json::from_str(json)?;
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .clone();
    if headers.iter().ne(COLUMNS) {
        return Err(parse_err("unexpected columns"));
    }
    let mut cells = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| {
                parse_err(format!("bad number '{}' in column {}", &row[i], COLUMNS[i]))
            })
        };
        let status = match &row[6] {
            "pending" => CellStatus::Pending,
            "completed" => CellStatus::Completed,
            "failed" => CellStatus::Failed,
            other => return Err(parse_err(format!("unknown status '{other}'"))),
        };
        cells.push(CellRecord {
            omega_c: num(0)?,
            temperature: num(1)?,
            seed: row[10]
                .parse()
                .map_err(|_| parse_err(format!("bad seed '{}'", &row[10])))?,
            status,
            value: parse_opt(&row[7], COLUMNS[7])?,
            noise_floor: parse_opt(&row[5], COLUMNS[5])?,
            t_end: parse_opt(&row[8], COLUMNS[8])?,
            max_excess: parse_opt(&row[9], COLUMNS[9])?,
            diagnostic: (!row[11].is_empty()).then(|| row[11].to_string()),
        });
    }
    let result = SweepResult {
        spec: provenance.spec,
        metadata: provenance.metadata,
        cells,
    };
    if result.cells.len() != result.spec.len() {
        return Err(parse_err(format!(
            "{} rows for a {}-cell grid",
            result.cells.len(),
            result.spec.len()
        )));
    }
    Ok(result)
}

pub fn to_json(result: &SweepResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn from_json(text: &str) -> Result<SweepResult> {
    let result: SweepResult = serde_json::from_str(text)?;
    if result.cells.len() != result.spec.len() {
        return Err(Error::InvalidParameter(format!(
            "sweep JSON has {} cells for a {}-cell grid",
            result.cells.len(),
            result.spec.len()
        )));
    }
    Ok(result)
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    let tmp: PathBuf = path.with_file_name(name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn export(result: &SweepResult, format: ExportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => to_csv(result)?,
        ExportFormat::Json => to_json(result)?,
    };
    write_atomic(path, &text)
}

pub fn import(format: ExportFormat, path: &Path) -> Result<SweepResult> {
    let text = fs::read_to_string(path)?;
    match format {
        ExportFormat::Csv => from_csv(&text),
        ExportFormat::Json => from_json(&text),
    }
}

/// Checkpoints are JSON exports written via temp-file rename.
pub fn write_checkpoint(result: &SweepResult, path: &Path) -> Result<()> {
    export(result, ExportFormat::Json, path)
}

pub fn read_checkpoint(path: &Path) -> Result<SweepResult> {
    let corrupt = |reason: String| Error::CheckpointCorrupt {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(|e| corrupt(e.to_string()))?;
    from_json(&text).map_err(|e| corrupt(e.to_string()))
}
