use super::config::RunConfig;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Bool(b) => b.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        if x.is_finite() {
            Cell::Float(x)
        } else {
            Cell::Null
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Null, Cell::from)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Table { columns: columns.iter().map(|(c, _)| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io { path: "<csv buffer>".into(), message: e.to_string() };
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io { path: "<csv buffer>".into(), message: e.to_string() })
    }
}

/// The JSON document written for a successful run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<C> {
    pub schema_version: u32,
    pub command: String,
    pub config: C,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// The JSON document written when a run fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub schema_version: u32,
    pub command: String,
    pub status: String,
    pub reason: String,
    pub message: String,
    pub exit_code: i32,
}

impl Failure {
    pub fn new(command: &str, err: &Error) -> Self {
        Failure {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            status: "error".into(),
            reason: err.reason().into(),
            message: err.to_string(),
            exit_code: err.exit_code(),
        }
    }
}

pub fn to_json(table: &Table, config: &RunConfig) -> Result<Vec<u8>> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        command: config.command.name().to_string(),
        config,
        columns: table.columns.clone(),
        rows: table.rows.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Io { path: "<json buffer>".into(), message: e.to_string() })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `bytes` to `path` through a temporary file in the same directory and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: path.display().to_string(), message: e.to_string() };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Serializes the table in the configured format and writes it to `--out` or standard output.
pub fn export(table: &Table, config: &RunConfig) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let bytes = match config.format {
        super::config::Format::Csv => table.to_csv()?,
        super::config::Format::Json => to_json(table, config)?,
    };
    match &config.out {
        Some(path) => write_atomic(path, &bytes),
        None => std::io::stdout().write_all(&bytes).map_err(|e| Error::Io { path: "<stdout>".into(), message: e.to_string() }),
    }
}
