use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "algorithm,iteration,nmse_db,divergence_fraction,wallclock_ms";

/// Rounds to 6 significant digits, the precision kept in CSV output.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub iteration: usize,
    pub nmse_db: f64,
    pub divergence_fraction: f64,
    pub wallclock_ms: f64,
}

impl ResultRow {
    /// Row with its real fields rounded to CSV precision.
    pub fn new(algorithm: impl Into<String>, iteration: usize, nmse_db: f64, divergence_fraction: f64, wallclock_ms: f64) -> Self {
        Self {
            algorithm: algorithm.into(),
            iteration,
            nmse_db: round_sig(nmse_db),
            divergence_fraction: round_sig(divergence_fraction),
            wallclock_ms: round_sig(wallclock_ms),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// NMSE curve of one algorithm ordered by iteration.
    pub fn curve(&self, algorithm: &str) -> Vec<f64> {
        let mut rows: Vec<&ResultRow> = self.rows.iter().filter(|r| r.algorithm == algorithm).collect();
        rows.sort_by_key(|r| r.iteration);
        rows.into_iter().map(|r| r.nmse_db).collect()
    }

    pub fn algorithms(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.algorithm.as_str()) {
                names.push(&r.algorithm);
            }
        }
        names
    }

    /// Largest final-iteration divergence fraction over the algorithms.
    pub fn worst_divergence(&self) -> f64 {
        self.algorithms()
            .into_iter()
            .filter_map(|a| {
                self.rows
                    .iter()
                    .filter(|r| r.algorithm == a)
                    .max_by_key(|r| r.iteration)
                    .map(|r| r.divergence_fraction)
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for r in &self.rows {
            w.write_record([
                r.algorithm.clone(),
                r.iteration.to_string(),
                fmt_sig(r.nmse_db),
                fmt_sig(r.divergence_fraction),
                fmt_sig(r.wallclock_ms),
            ])
            .expect("in-memory write");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or("");
        if header != CSV_HEADER {
            return Err(Error::Parse {
                offset: 0,
                reason: format!("expected header `{CSV_HEADER}`"),
            });
        }
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let rows = reader
            .deserialize()
            .map(|r| {
                r.map_err(|e: csv::Error| Error::Parse {
                    offset: e.position().map_or(0, |p| p.byte() as usize),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }
}

fn fmt_sig(v: f64) -> String {
    format!("{}", round_sig(v))
}

/// Writes `table` as CSV with LF line endings.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    fs::write(path, table.to_csv_string()).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ResultTable::from_csv_str(&text)
}
