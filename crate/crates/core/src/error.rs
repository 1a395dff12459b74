use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the extraction and estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch in {tensor}: expected {expected}, found {found}")]
    Shape {
        tensor: String,
        expected: String,
        found: String,
    },

    #[error("duplicate posting id `{0}`")]
    DuplicatePosting(String),

    #[error("undefined similarity: {0}")]
    UndefinedSimilarity(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("demeaning did not converge after {iterations} iterations (max group mean {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("collinear regressors: {0}")]
    Collinear(String),

    #[error("missing baseline skill set for occupation `{0}`")]
    MissingBaseline(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing upstream artifact {path}: run stage `{stage}` first")]
    MissingArtifact { stage: String, path: PathBuf },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
