//! CLI-side error type and exit-code policy.
//!
//! Every variant here represents a configuration, usage, or I/O problem
//! and maps to exit code 2. Per-fit and per-cell *runtime* failures are
//! not errors: they are recorded in the outputs and surface as exit
//! code 1 ("completed with failures").

use std::path::PathBuf;

use thiserror::Error;

use rctherm_core::{EstimationError, EvalError, ModelError, SimError, TimeSeriesError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Ingestion problem pinned to a file and 1-based line number.
    #[error("{}:{line}: {message}", path.display())]
    Ingest {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    FileFormat { path: PathBuf, message: String },

    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    /// Everything requested succeeded.
    Clean,
    /// The command ran to the end but some fits/cells failed; details are
    /// in the outputs.
    WithFailures { failed: usize },
}

impl Completion {
    pub fn exit_code(self) -> i32 {
        match self {
            Completion::Clean => 0,
            Completion::WithFailures { .. } => 1,
        }
    }
}
