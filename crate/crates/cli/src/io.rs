//! Output-file plumbing: the sweep CSV, per-frequency JSON records and
//! solver states, per-iteration history CSVs, and sweep metadata.
//!
//! Every float destined for a CSV goes through [`fmt`] (17 significant
//! digits), which is enough to reproduce the `f64` bit pattern exactly; JSON
//! goes through serde_json, whose shortest-roundtrip float printing is
//! likewise lossless. Together with parsing state files back at full
//! precision this is what makes resumed runs byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use schur_core::minimax::HistoryEntry;

use crate::{io_err, CliError};

pub const CSV_HEADER: &str = "omega,schur_estimate,l2_norm_k,truncation_norm,iterations,ref_points";

pub const HISTORY_HEADER: &str = "iteration,t,ref_points";

/// Formats a float with 17 significant digits, enough for exact round-trip.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// One completed (or attempted) frequency: the CSV carries the scalar
/// columns, the JSON record additionally the optimized weight profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub omega: f64,
    /// Schur bound re-evaluated on the fine grid.
    pub schur_estimate: f64,
    pub l2_norm_k: f64,
    pub truncation_norm: f64,
    pub iterations: u64,
    pub ref_points: usize,
    /// False when the solver stalled and the best-so-far state was recorded.
    pub converged: bool,
    /// Optimized left weight profile on the fine grid.
    pub p_samples: Vec<f64>,
    /// Optimized right weight profile on the fine grid.
    pub q_samples: Vec<f64>,
}

impl SweepRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            fmt(self.omega),
            fmt(self.schur_estimate),
            fmt(self.l2_norm_k),
            fmt(self.truncation_norm),
            self.iterations,
            self.ref_points
        )
    }
}

/// Sweep-level metadata written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    /// Traversal order of the frequency lattice.
    pub direction: String,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_step: f64,
    pub omega_count: usize,
}

/// Paths under the output directory.
#[derive(Debug, Clone)]
pub struct OutputLayout {
    root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sweep_csv(&self) -> PathBuf {
        self.root.join("sweep.csv")
    }

    pub fn baselines(&self) -> PathBuf {
        self.root.join("baselines.json")
    }

    pub fn meta(&self) -> PathBuf {
        self.root.join("meta.json")
    }

    pub fn state_file(&self, key: &str) -> PathBuf {
        self.root.join("state").join(format!("{key}.json"))
    }

    pub fn record_file(&self, key: &str) -> PathBuf {
        self.root.join("records").join(format!("{key}.json"))
    }

    pub fn history_file(&self, key: &str) -> PathBuf {
        self.root.join("history").join(format!("{key}.csv"))
    }

    pub fn plot_file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn ensure_dirs(&self) -> Result<(), CliError> {
        for dir in [
            self.root.clone(),
            self.root.join("state"),
            self.root.join("records"),
            self.root.join("history"),
        ] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(())
    }
}

pub fn write_string(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn read_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn append_line(path: &Path, line: &str) -> Result<(), CliError> {
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    writeln!(file, "{line}").map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| CliError::BadFile { path: path.to_path_buf(), source })?;
    text.push('\n');
    write_string(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_string(path)?;
    serde_json::from_str(&text)
        .map_err(|source| CliError::BadFile { path: path.to_path_buf(), source })
}

/// Writes the per-iteration solver history (level and reference count).
pub fn write_history(path: &Path, history: &[HistoryEntry]) -> Result<(), CliError> {
    let mut text = String::from(HISTORY_HEADER);
    text.push('\n');
    for e in history {
        text.push_str(&format!("{},{},{}\n", e.iteration, fmt(e.t), e.ref_count));
    }
    write_string(path, &text)
}

/// A parsed CSV: header names plus string cells, with typed column access.
#[derive(Debug, Clone)]
pub struct CsvTable {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = read_string(path)?;
        let mut lines = text.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| CliError::EmptyInput(path.to_path_buf()))?;
        let header: Vec<String> = header_line.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            rows.push(line.split(',').map(|s| s.trim().to_string()).collect());
        }
        Ok(Self { path: path.to_path_buf(), header, rows })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    fn column(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::MissingColumn(name.to_string()))
    }

    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let idx = self.column(name)?;
        self.rows
            .iter()
            .map(|row| {
                row.get(idx)
                    .and_then(|cell| cell.parse::<f64>().ok())
                    .ok_or_else(|| {
                        CliError::Config(format!(
                            "{}: column `{name}` holds a non-numeric cell",
                            self.path.display()
                        ))
                    })
            })
            .collect()
    }

    pub fn u64_column(&self, name: &str) -> Result<Vec<u64>, CliError> {
        let idx = self.column(name)?;
        self.rows
            .iter()
            .map(|row| {
                row.get(idx)
                    .and_then(|cell| cell.parse::<u64>().ok())
                    .ok_or_else(|| {
                        CliError::Config(format!(
                            "{}: column `{name}` holds a non-integer cell",
                            self.path.display()
                        ))
                    })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_round_trip_exactly() {
        for x in [0.05_f64, -20.0, 0.766222892967, 1.0 / 3.0, 6.02e23, 1e-300] {
            let printed = fmt(x);
            let back: f64 = printed.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{printed}");
        }
    }

    #[test]
    fn csv_table_reports_missing_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_string(&path, "omega,value\n1.0,2.0\n").unwrap();
        let table = CsvTable::read(&path).unwrap();
        assert_eq!(table.f64_column("omega").unwrap(), vec![1.0]);
        let err = table.f64_column("schur_estimate").unwrap_err();
        assert!(matches!(err, CliError::MissingColumn(ref c) if c == "schur_estimate"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn record_row_matches_header_arity() {
        let rec = SweepRecord {
            omega: -0.05,
            schur_estimate: 0.8,
            l2_norm_k: 0.81,
            truncation_norm: 0.74,
            iterations: 12,
            ref_points: 3,
            converged: true,
            p_samples: vec![],
            q_samples: vec![],
        };
        let row = rec.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("-5.0000000000000003e-2,"), "{row}");
    }
}
