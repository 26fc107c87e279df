use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// 12 significant digits in scientific notation, locale independent.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.11e}")
    }
}

pub fn log10_or_nan(x: f64) -> f64 {
    if x > 0.0 {
        x.log10()
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::NAN
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::io)?;
        for r in &self.rows {
            w.write_record(r).map_err(CliError::io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Failure(e.to_string()))
    }

    fn row_objects(&self) -> Vec<Value> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut m = Map::new();
                m.insert("row".into(), Value::from(i));
                for (h, v) in self.header.iter().zip(r) {
                    m.insert((*h).into(), Value::from(v.as_str()));
                }
                Value::Object(m)
            })
            .collect()
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_digest: &'a str,
    tool_version: &'static str,
    wall_clock_seconds: f64,
    metadata: Value,
    rows: Vec<Value>,
}

pub struct Run<'a> {
    pub command: &'a str,
    pub config_digest: &'a str,
    pub metadata: Value,
    pub started: std::time::Instant,
}

/// Writes the CSV to `out` (or stdout) and, with `out`, a manifest next to
/// it.
pub fn emit(table: &Table, out: Option<&Path>, run: Run<'_>) -> Result<(), CliError> {
    let csv = table.to_csv()?;
    let Some(path) = out else {
        std::io::stdout().write_all(csv.as_bytes()).map_err(CliError::io)?;
        return Ok(());
    };
    fs::write(path, &csv).map_err(CliError::io)?;
    let manifest = RunManifest {
        command: run.command,
        config_digest: run.config_digest,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_clock_seconds: run.started.elapsed().as_secs_f64(),
        metadata: run.metadata,
        rows: table.row_objects(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Failure(e.to_string()))?;
    fs::write(manifest_path(path), text + "\n").map_err(CliError::io)?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
