//! Error types shared across the pipeline.
//!
//! Every failure mode named by a pipeline stage maps onto one variant here so
//! the CLI can translate error classes into documented exit codes.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Dataset file violates the `text,label` schema.
    #[error("dataset schema error in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },

    /// A specific dataset row is invalid (unknown label, empty text, ...).
    #[error("dataset row error at line {line}: {reason}")]
    Row { line: u64, reason: String },

    /// Stratified splitting requires every class to be populated.
    #[error("degenerate class under stratification: {class} has 0 records")]
    DegenerateClass { class: String },

    /// Invalid configuration value or inconsistent config combination.
    #[error("config error: {0}")]
    Config(String),

    /// An operation received an out-of-contract input.
    #[error("input error: {0}")]
    Input(String),

    /// Embedding provider failed or is not set up; retryable.
    #[error("embedding provider '{provider}' error{}: {reason}", fmt_index(*.index))]
    Provider {
        provider: String,
        /// Index of the failing text within the batch, when known.
        index: Option<usize>,
        reason: String,
    },

    /// A binary file does not have the expected magic/version.
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// A binary file is truncated or otherwise unreadable mid-stream.
    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    /// Stored dimension does not match the expected embedding spec.
    #[error("embedding spec mismatch: expected dimension {expected}, found {found}")]
    SpecMismatch { expected: usize, found: usize },

    /// Cache row hash no longer matches the current cleaned text.
    #[error("stale embedding cache: row {row} does not match its source text")]
    StaleCache { row: usize },

    /// Training produced a non-finite loss.
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },

    /// Checkpoint exists but cannot be used (version/architecture mismatch).
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Input text cleaned down to nothing; prediction refused.
    #[error("refusing to predict: {0}")]
    Refusal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_index(index: Option<usize>) -> String {
    match index {
        Some(i) => format!(" at input {i}"),
        None => String::new(),
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code of this error class when surfaced by the CLI.
    ///
    /// 2 config/usage, 3 dataset, 4 provider, 5 file format/staleness,
    /// 6 divergence, 7 refusal, 1 everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Input(_) => 2,
            Error::Schema { .. } | Error::Row { .. } | Error::DegenerateClass { .. } => 3,
            Error::Provider { .. } => 4,
            Error::Format { .. }
            | Error::Corrupt { .. }
            | Error::SpecMismatch { .. }
            | Error::StaleCache { .. }
            | Error::Checkpoint(_) => 5,
            Error::Divergence { .. } => 6,
            Error::Refusal(_) => 7,
            Error::Io { .. } => 1,
        }
    }
}
