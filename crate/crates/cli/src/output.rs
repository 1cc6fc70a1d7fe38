//! CSV and JSON emission with a `#`-prefixed metadata header.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const ARTIFACT_VERSION: &str = concat!("dicke-prep ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug)]
pub struct OutputSettings {
    pub out_dir: PathBuf,
    pub timestamp: bool,
}

impl OutputSettings {
    pub fn new(out_dir: impl Into<PathBuf>, timestamp: bool) -> Self {
        OutputSettings { out_dir: out_dir.into(), timestamp }
    }

    fn path(&self, name: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out_dir).map_err(|e| CliError::io(&self.out_dir, e))?;
        Ok(self.out_dir.join(name))
    }

    fn header_lines(&self, job: &str, config: &Value) -> Vec<String> {
        let mut lines = vec![format!("version: {ARTIFACT_VERSION}"), format!("job: {job}"), format!("config: {config}")];
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            lines.push(format!("generated_unix: {secs}"));
        }
        lines
    }
}

/// Column-named rows of already formatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip text for a float, switching to exponent form for very
/// large or small magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_csv(settings: &OutputSettings, name: &str, job: &str, config: &Value, table: &Table) -> CliResult<PathBuf> {
    let path = settings.path(name)?;
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut out = BufWriter::new(file);
    for line in settings.header_lines(job, config) {
        writeln!(out, "# {line}").map_err(|e| CliError::io(&path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(settings: &OutputSettings, name: &str, job: &str, config: &Value, data: &T) -> CliResult<PathBuf> {
    let path = settings.path(name)?;
    let mut meta = json!({ "version": ARTIFACT_VERSION, "job": job, "config": config });
    if settings.timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        meta["generated_unix"] = json!(secs);
    }
    let doc = json!({ "meta": meta, "data": data });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Splits the data section (non-`#` lines) off a written file.
pub fn data_section(path: &Path) -> CliResult<String> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect())
}
