use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argmax of an empty vector")]
    EmptyInput,
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("feature atoms are not pairwise distinct (atoms {0} and {1})")]
    DuplicateAtom(usize, usize),
    #[error("feature {0:?} is not an atom of the feature set")]
    UnknownAtom(Vec<f64>),
    #[error("no task accepted for error range [{lo}, {hi}] within {attempts} attempts")]
    SamplingBudget { lo: f64, hi: f64, attempts: usize },
    #[error("transition log is missing warm-up task {0}")]
    MissingWarmup(usize),
    #[error("record sets disagree on task count ({0} vs {1})")]
    TaskCountMismatch(usize, usize),
    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("I/O error on {path}: {source}")]
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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
