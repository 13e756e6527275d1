use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter {field}: {message}")]
    InvalidParam { field: String, message: String },

    #[error("all alias weights are zero")]
    ZeroWeights,

    #[error("empty walk corpus")]
    EmptyCorpus,

    #[error("empty target string")]
    EmptyTarget,

    #[error("missing embeddings for {count} ids: {ids}")]
    MissingIds { count: usize, ids: String },

    #[error("duplicate id {0:?} in embedding file")]
    DuplicateId(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite loss {loss} ({context})")]
    NonFiniteLoss { loss: f64, context: String },

    #[error("no present votes among active modalities")]
    NoVotes,

    #[error("unknown target {0:?}")]
    UnknownTarget(String),

    #[error("insufficient posts for target {target:?}: need {required}, have {available}")]
    InsufficientPosts {
        target: String,
        required: usize,
        available: usize,
    },

    #[error("infeasible graph: {0}")]
    Infeasible(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

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

    pub fn param(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParam {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::InvalidParam { .. } => "invalid_param",
            Error::ZeroWeights => "zero_weights",
            Error::EmptyCorpus => "empty_corpus",
            Error::EmptyTarget => "empty_target",
            Error::MissingIds { .. } => "missing_ids",
            Error::DuplicateId(_) => "duplicate_id",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::NoVotes => "no_votes",
            Error::UnknownTarget(_) => "unknown_target",
            Error::InsufficientPosts { .. } => "insufficient_posts",
            Error::Infeasible(_) => "infeasible",
            Error::Checkpoint(_) => "checkpoint",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
