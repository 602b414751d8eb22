//! Result tables: one row per evaluation point, written as RFC-4180 CSV or
//! as a JSON array of row objects.
//!
//! CSV rows are flushed as they are produced, so an aborted sweep still
//! leaves every completed row behind. JSON output is buffered and written by
//! [`Table::finish`], which abort paths call before exiting.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use simplexq::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!(
                "unknown output format {other:?}; expected csv or json"
            ))),
        }
    }
}

/// One table cell. `Empty` marks a model that is not applicable (or not
/// finite) at this point: an empty CSV field, `null` in JSON.
#[derive(Debug, Clone)]
pub enum Cell {
    Empty,
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn to_field(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Empty => serde_json::Value::Null,
            Cell::Num(v) => serde_json::Value::from(*v),
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Text(v) => serde_json::Value::from(v.as_str()),
        }
    }
}

enum Sink {
    Csv(csv::Writer<Box<dyn Write>>),
    Json { out: Box<dyn Write>, rows: Vec<serde_json::Value> },
}

pub struct Table {
    columns: Vec<String>,
    sink: Sink,
}

fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p)
                .map_err(|e| Error::Config(format!("cannot create {}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout()),
    })
}

impl Table {
    pub fn new(columns: &[String], format: Format, path: Option<&Path>) -> Result<Table> {
        let out = open_sink(path)?;
        let sink = match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::CRLF)
                    .from_writer(out);
                w.write_record(columns)
                    .and_then(|()| w.flush().map_err(csv::Error::from))
                    .map_err(|e| Error::Config(format!("cannot write output: {e}")))?;
                Sink::Csv(w)
            }
            Format::Json => Sink::Json { out, rows: Vec::new() },
        };
        Ok(Table { columns: columns.to_vec(), sink })
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> Result<()> {
        assert_eq!(cells.len(), self.columns.len(), "row shape mismatch");
        match &mut self.sink {
            Sink::Csv(w) => {
                let fields: Vec<String> = cells.iter().map(Cell::to_field).collect();
                w.write_record(&fields)
                    .and_then(|()| w.flush().map_err(csv::Error::from))
                    .map_err(|e| Error::Config(format!("cannot write output: {e}")))
            }
            Sink::Json { rows, .. } => {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(&cells)
                    .map(|(name, cell)| (name.clone(), cell.to_json()))
                    .collect();
                rows.push(serde_json::Value::Object(obj));
                Ok(())
            }
        }
    }

    /// Flushes the table; for JSON this is what actually writes the array.
    pub fn finish(self) -> Result<()> {
        match self.sink {
            Sink::Csv(mut w) => {
                w.flush().map_err(|e| Error::Config(format!("cannot write output: {e}")))
            }
            Sink::Json { mut out, rows } => {
                serde_json::to_writer_pretty(&mut out, &serde_json::Value::Array(rows))
                    .map_err(|e| Error::Config(format!("cannot write output: {e}")))?;
                out.write_all(b"\n")
                    .and_then(|()| out.flush())
                    .map_err(|e| Error::Config(format!("cannot write output: {e}")))
            }
        }
    }
}
