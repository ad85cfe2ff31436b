use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("gamma band above Nyquist (sample rate {0} Hz must exceed 90 Hz)")]
    GammaAboveNyquist(f64),

    #[error("too short for 4-level DWT: {0} samples (need at least 16)")]
    TooShortForDwt(usize),

    #[error("unknown node {0}")]
    UnknownNode(u32),

    #[error("duplicate node id {0}")]
    DuplicateNode(u32),

    #[error("no synapse between nodes {0} and {1}")]
    NoSynapse(u32, u32),

    #[error("non-positive importance mass ({0})")]
    NonPositiveImportance(f64),

    #[error("empty batch")]
    EmptyBatch,

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("subject `{subject}`: {reason}")]
    Subject { subject: String, reason: String },

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn subject(subject: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Subject {
            subject: subject.into(),
            reason: reason.into(),
        }
    }
}
