use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 9] = [
    "schema_version",
    "experiment",
    "sigma",
    "quantity",
    "value",
    "stderr",
    "method",
    "seed",
    "wall_time_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub experiment: String,
    pub sigma: f64,
    pub quantity: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub wall_time_ms: Option<u64>,
}

/// Collects rows and, for CSV output, streams each one to disk as soon as it
/// is pushed.
pub struct RowSink {
    csv: Option<(csv::Writer<BufWriter<File>>, PathBuf)>,
    rows: Vec<ResultRow>,
}

impl RowSink {
    pub fn memory() -> Self {
        Self {
            csv: None,
            rows: Vec::new(),
        }
    }

    pub fn csv(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(BufWriter::new(file));
        w.write_record(CSV_COLUMNS)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            csv: Some((w, path.to_path_buf())),
            rows: Vec::new(),
        })
    }

    pub fn push(&mut self, row: ResultRow) -> Result<()> {
        if let Some((w, path)) = &mut self.csv {
            w.serialize(&row)?;
            w.flush().map_err(|e| CliError::io(path.as_path(), e))?;
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<ResultRow> {
        self.rows
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}
