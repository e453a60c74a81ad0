use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed XML in {path}: {message}")]
    Xml { path: PathBuf, message: String },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("unsupported dataset version {found} (this build reads up to {supported})")]
    Version { found: String, supported: u32 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("target variable has a single category; its entropy is zero")]
    DegenerateTarget,

    #[error("both variables have a single category")]
    Degenerate,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("feature pair ({a}, {b}): {source}")]
    FeaturePair {
        a: String,
        b: String,
        #[source]
        source: Box<Error>,
    },

    #[error("feature {feature}: {source}")]
    Feature {
        feature: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
