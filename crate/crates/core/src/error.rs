use std::path::PathBuf;

use chrono::NaiveDateTime;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("column `{column}` (mapped from `{field}`) not found in CSV header")]
    Schema { field: &'static str, column: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid charging event: {0}")]
    InvalidEvent(String),

    #[error("series alignment error: {0}")]
    Alignment(String),

    #[error("malformed series file at row {row}: {reason}")]
    SeriesFormat { row: usize, reason: String },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("insufficient history: need more than {needed} steps, series has {available}; supply a longer series or shorter lags")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("target at {0} lacks the history required for a persistence forecast")]
    PersistenceHistory(NaiveDateTime),

    #[error("category index {index} out of range for cardinality {cardinality}")]
    Domain { index: usize, cardinality: usize },

    #[error("too few rows to split: {0} (need at least 10); supply more data or relax the exclusions")]
    TooFewRows(usize),

    #[error("GLM fit failed for day-of-week {day}: {reason}")]
    GlmFit { day: u8, reason: String },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("model `{model}` is incompatible with the feature matrix: {reason}")]
    ModelMismatch { model: String, reason: String },

    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 1 = validation/config error, 2 = data error, 3 = training error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schema { .. } => 1,
            Error::Divergence { .. } | Error::GlmFit { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
