use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("item {id:?} has zero total votes")]
    ZeroTotal { id: String },

    #[error("counts sum to zero; at least one vote is required")]
    EmptyCounts,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("undefined divergence: p[{index}] = {p} > 0 but q[{index}] = 0 (apply smoothing alpha > 0)")]
    UndefinedDivergence { index: usize, p: f64 },

    #[error("zero refined probability for observed label {label} (apply smoothing alpha > 0)")]
    ZeroProbability { label: usize },

    #[error("empty pool")]
    EmptyPool,

    #[error("degenerate synthetic distribution: standard deviation of replicate losses is zero")]
    DegenerateSynthetic,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("all {0} trials failed; last error: {1}")]
    AllTrialsFailed(usize, String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error originates from the filesystem rather than from
    /// invalid input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
