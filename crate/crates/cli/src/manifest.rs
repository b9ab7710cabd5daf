//! Result manifests, CSV tables and manifest comparison.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::OutputError;

pub const SCHEMA: &str = "lfvlab-manifest v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// `columns` as `(name, unit)` pairs.
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: n.to_string(),
                    unit: u.to_string(),
                })
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultManifest {
    pub schema: String,
    pub tool_version: String,
    pub scenario_name: String,
    pub experiment: String,
    /// Canonical scenario text; `parse_scenario` on it reproduces the run.
    pub scenario_echo: String,
    pub n_delta: Option<String>,
    pub delta_weight: Option<String>,
    pub ancilla_cutoffs: Vec<usize>,
    pub seeds: Vec<u64>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl ResultManifest {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn load(path: &Path) -> Result<Self, OutputError> {
        let text = fs::read_to_string(path).map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| OutputError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Write through a temporary file in the target directory, then rename.
    pub fn write_atomic(&self, path: &Path) -> Result<(), OutputError> {
        let io = |source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
        serde_json::to_writer_pretty(&mut tmp, self).map_err(|source| OutputError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        tmp.write_all(b"\n").map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }
}

/// One CSV per table, named `<table>.csv`, header row of column names,
/// values as `{:.17e}`. Returns the written paths.
pub fn emit_csv(manifest: &ResultManifest, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(manifest.tables.len());
    for table in &manifest.tables {
        let path = dir.join(format!("{}.csv", table.name));
        let csv_err = |source| OutputError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(table.columns.iter().map(|c| c.name.as_str())).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|v| format!("{v:.17e}"))).map_err(csv_err)?;
        }
        w.flush().map_err(|source| OutputError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// Table differences larger than `tol` (absolute), one message each.
pub fn compare_manifests(a: &ResultManifest, b: &ResultManifest, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    if a.experiment != b.experiment {
        out.push(format!("experiment differs: {} vs {}", a.experiment, b.experiment));
    }
    for ta in &a.tables {
        let Some(tb) = b.table(&ta.name) else {
            out.push(format!("table {} missing from the second manifest", ta.name));
            continue;
        };
        if ta.columns != tb.columns {
            out.push(format!("table {}: columns differ", ta.name));
            continue;
        }
        if ta.rows.len() != tb.rows.len() {
            out.push(format!("table {}: {} rows vs {}", ta.name, ta.rows.len(), tb.rows.len()));
            continue;
        }
        let mut worst: Option<(usize, usize, f64)> = None;
        let mut count = 0usize;
        for (i, (ra, rb)) in ta.rows.iter().zip(&tb.rows).enumerate() {
            for (j, (x, y)) in ra.iter().zip(rb).enumerate() {
                let d = (x - y).abs();
                if d > tol || (d.is_nan() && x.to_bits() != y.to_bits()) {
                    count += 1;
                    if worst.map_or(true, |(_, _, w)| d > w) {
                        worst = Some((i, j, d));
                    }
                }
            }
        }
        if let Some((i, j, d)) = worst {
            out.push(format!(
                "table {}: {count} values differ by more than {tol:e}; largest {d:e} at row {i}, column {}",
                ta.name, ta.columns[j].name
            ));
        }
    }
    for tb in &b.tables {
        if a.table(&tb.name).is_none() {
            out.push(format!("table {} missing from the first manifest", tb.name));
        }
    }
    out
}
