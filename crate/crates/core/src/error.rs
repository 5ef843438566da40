use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fmt 212 data truncated at byte offset {offset}: need {needed} bytes, have {available}")]
    Decode {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("header line {line}: {msg}")]
    HeaderParse { line: usize, msg: String },

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("record integrity: {0}")]
    Integrity(String),

    #[error("annotation line {line}: {msg}")]
    Annotation { line: usize, msg: String },

    #[error("unsupported storage format {0}")]
    UnsupportedFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(String),

    #[error("filter design: {0}")]
    Design(String),

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("detection: {0}")]
    Detection(String),

    #[error("insufficient beats: need {needed}, got {got}")]
    InsufficientBeats { needed: usize, got: usize },

    #[error("insufficient data for {feature}: need {needed}, got {got}")]
    InsufficientData {
        feature: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("incompatible model file version: expected {expected}, found {found:?}")]
    Incompatible { expected: &'static str, found: String },

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("unlabeled units: {}", .0.join(", "))]
    MissingLabels(Vec<String>),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Name of the pipeline stage that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Decode { .. }
            | Error::HeaderParse { .. }
            | Error::InvalidHeader(_)
            | Error::Integrity(_)
            | Error::Annotation { .. }
            | Error::UnsupportedFormat(_)
            | Error::Csv(_) => "signal_io",
            Error::Io { .. } => "io",
            Error::Design(_) | Error::SignalTooShort { .. } => "preprocess",
            Error::Detection(_) | Error::InsufficientBeats { .. } => "fiducial",
            Error::InsufficientData { .. } | Error::DegenerateSignal(_) => "features",
            Error::DegenerateFit(_)
            | Error::Hyperparameter(_)
            | Error::ModelFormat(_)
            | Error::Incompatible { .. } => "classify",
            Error::Metrics(_) | Error::MissingLabels(_) => "eval",
            Error::Config(_) => "cli",
        }
    }

    /// True for errors caused by bad invocation or configuration rather
    /// than by the signal or data being processed.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Hyperparameter(_) | Error::Design(_) | Error::Io { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
