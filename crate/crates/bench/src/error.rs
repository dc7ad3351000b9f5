use std::path::PathBuf;

use thiserror::Error;

/// Failures from a bench command, grouped by process exit code.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Data(_) | BenchError::Output { .. } => 3,
            BenchError::Numerical(_) => 4,
        }
    }

    pub fn output(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Output { path: path.into(), source }
    }
}

impl From<eeg_coreset::Error> for BenchError {
    fn from(e: eeg_coreset::Error) -> Self {
        use eeg_coreset::Error as E;
        if e.is_numerical() {
            return BenchError::Numerical(e.to_string());
        }
        match e {
            E::Spec(_) => BenchError::Config(e.to_string()),
            other => BenchError::Data(other.to_string()),
        }
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for BenchError {
    fn from(e: serde_json::Error) -> Self {
        BenchError::Data(e.to_string())
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;
