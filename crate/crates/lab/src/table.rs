//! Column-ordered tables written as CSV or as a JSON array of row objects.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Panics if the row width differs from the column count.
    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match columns"
        );
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(csv_cell))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().cloned())
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Writes `<dir>/<stem>.<ext>` and returns the path.
    pub fn write(&self, dir: &Path, stem: &str, format: OutputFormat) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let file = File::create(&path).map_err(|e| LabError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        match format {
            OutputFormat::Csv => self
                .write_csv(&mut w)
                .map_err(|e| LabError::format(&path, e))?,
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut w, &self.to_json())
                    .map_err(|e| LabError::format(&path, e))?;
                w.write_all(b"\n").map_err(|e| LabError::io(&path, e))?;
            }
        }
        w.flush().map_err(|e| LabError::io(&path, e))?;
        Ok(path)
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => u8::from(*b).to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Number cell; non-finite values become null (an empty CSV cell).
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Reads a CSV or JSON file (by extension) of flat records.
pub fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| LabError::format(path, e))
    } else {
        csv::Reader::from_reader(file)
            .deserialize()
            .collect::<csv::Result<Vec<T>>>()
            .map_err(|e| LabError::format(path, e))
    }
}
