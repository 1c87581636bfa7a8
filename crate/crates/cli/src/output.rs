//! Plot-ready tables and JSON documents.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::OutputFormat;
use crate::error::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            // Shortest round-trip representation.
            Self::Float(v) => format!("{v:e}"),
            Self::Bool(v) => v.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Self::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

/// Column names carry their unit as a suffix, e.g. `t_s`, `E_J`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(PipelineError::io(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(PipelineError::io(path))?))
}

/// Writes `table` as `<stem>.csv` or `<stem>.json` under `dir`; returns the
/// file name.
pub fn write_table(dir: &Path, stem: &str, table: &Table, format: OutputFormat) -> Result<String, PipelineError> {
    let name = match format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    };
    let path = dir.join(&name);
    let file = create(&path)?;
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(file);
            let fail = |e: csv::Error| PipelineError::Format {
                path: path.clone(),
                message: e.to_string(),
            };
            w.write_record(&table.columns).map_err(fail)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::text)).map_err(fail)?;
            }
            w.flush().map_err(PipelineError::io(&path))?;
        }
        OutputFormat::Json => {
            let mut w = file;
            serde_json::to_writer(&mut w, table).map_err(|e| PipelineError::format(&path)(e.to_string()))?;
            w.write_all(b"\n").map_err(PipelineError::io(&path))?;
            w.flush().map_err(PipelineError::io(&path))?;
        }
    }
    Ok(name)
}

/// Pretty-printed JSON document at `dir/name`.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String, PipelineError> {
    let path = dir.join(name);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| PipelineError::format(&path)(e.to_string()))?;
    w.write_all(b"\n").map_err(PipelineError::io(&path))?;
    w.flush().map_err(PipelineError::io(&path))?;
    Ok(name.to_string())
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<String, PipelineError> {
    let path: PathBuf = dir.join(name);
    let mut w = create(&path)?;
    w.write_all(text.as_bytes()).map_err(PipelineError::io(&path))?;
    w.flush().map_err(PipelineError::io(&path))?;
    Ok(name.to_string())
}
