//! Command-line driver for the Schur-bound pipeline: configuration
//! ingestion, single-frequency estimation, resumable frequency sweeps,
//! baseline constants, and SVG plot emission.

use std::path::PathBuf;

use thiserror::Error;

use schur_core::kernel::KernelError;

pub mod commands;
pub mod config;
pub mod io;
pub mod plot;

/// Everything the binary can fail with, mapped onto its exit codes:
/// `2` bad configuration or unusable input files, `3` degenerate kernel
/// denominator, `4` solver failure, `1` anything else.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("{0}: no data rows, nothing to plot")]
    EmptyInput(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    BadFile {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingColumn(_) | CliError::EmptyInput(_) => 2,
            CliError::Kernel(KernelError::DegenerateDenominator { .. }) => 3,
            CliError::Solver(_) => 4,
            CliError::Kernel(_) | CliError::Io { .. } | CliError::BadFile { .. } => 1,
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}
