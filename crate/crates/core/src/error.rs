use std::path::PathBuf;

use thiserror::Error;

use crate::month::MonthKey;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("risk-free series has no observation on or before {0}")]
    Coverage(chrono::NaiveDate),

    #[error("month {month} has {rows} daily rows; at least 2 are required")]
    DegenerateMonth { month: MonthKey, rows: usize },

    #[error("state {state} has {rows} daily rows; at least 2 are required")]
    DegenerateState { state: usize, rows: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("degenerate efficient frontier: {0}")]
    DegenerateFrontier(String),

    #[error("covariance matrix is singular after ridge {ridge:e}")]
    SingularCovariance { ridge: f64 },

    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("power iteration did not converge after {iterations} iterations (reducible or periodic chain)")]
    ReducibleChain {
        iterations: usize,
        last_iterate: Vec<f64>,
    },

    #[error("{month}: {source}")]
    InMonth {
        month: MonthKey,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_month(self, month: MonthKey) -> Self {
        Error::InMonth {
            month,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
