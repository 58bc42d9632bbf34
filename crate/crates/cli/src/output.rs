// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};
use spinboson::sweep::ExportFormat;

use crate::config::RunConfig;
use crate::CliError;

/// Provenance block written at the top of every output.
#[derive(Serialize)]
pub struct Provenance<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    pub options: Value,
}

impl<'a> Provenance<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig, options: Value) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            options,
        }
    }
}

/// Numeric table with optional trailer rows that only appear in CSV (JSON
/// callers put the same data into `extra`).
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub trailer: Vec<Vec<f64>>,
    pub extra: Map<String, Value>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            trailer: Vec::new(),
            extra: Map::new(),
        }
    }
}

fn csv_line(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    cells.join(",")
}

pub fn config_line(p: &Provenance) -> Result<String, CliError> {
    Ok(format!("# config: {}\n", serde_json::to_string(p)?))
}

pub fn render(p: &Provenance, table: &Table, format: ExportFormat) -> Result<String, CliError> {
    match format {
        ExportFormat::Csv => {
            let mut out = config_line(p)?;
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in table.rows.iter().chain(&table.trailer) {
                out.push_str(&csv_line(row));
                out.push('\n');
            }
            Ok(out)
        }
        ExportFormat::Json => {
            let mut doc = json!({
                "provenance": p,
                "columns": table.columns,
                "rows": table.rows,
            });
            let obj = doc.as_object_mut().expect("object literal");
            obj.extend(table.extra.clone());
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}

pub fn emit(config: &RunConfig, text: &str) -> Result<(), CliError> {
    match &config.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
            {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}
