use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: duplicate result for dataset {dataset:?}, algorithm {algorithm:?}")]
    DuplicatePair {
        line: u64,
        dataset: String,
        algorithm: String,
    },
    #[error("line {line}: accuracy {value} outside [0, 1]")]
    AccuracyOutOfRange { line: u64, value: f64 },
    #[error("line {line}: runtime {value} must be positive")]
    NonPositiveRuntime { line: u64, value: f64 },
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("dataset {0:?} has no test results")]
    EmptyDataset(String),
    #[error("rankings share {0} algorithms; at least 2 are required")]
    TooFewCommon(usize),
    #[error("no dataset pair shares at least two algorithms")]
    NoValidPairs,
    #[error("ranking weight undefined: {0}")]
    InvalidWeight(String),
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error("ranking universe size {found} does not match {expected}")]
    InconsistentUniverse { expected: usize, found: usize },
    #[error("invalid ranking: {0}")]
    InvalidRanking(String),
    #[error("invalid loss-time curve: {0}")]
    InvalidCurve(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
