use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank-deficient design for model {model}: {detail}")]
    RankDeficient { model: String, detail: String },

    #[error("optimizer diverged at iteration {iteration}; last finite iterate {last_finite:?}")]
    Divergence {
        iteration: usize,
        last_finite: Vec<f64>,
    },

    #[error("information matrix is not positive definite at the mode")]
    Curvature,

    #[error("model space has p = {p} covariates, above the enumeration guard of {limit}")]
    EnumerationGuard { p: usize, limit: usize },

    #[error("load error: {0}")]
    Load(String),

    #[error("parse error at {location}: {detail}")]
    Parse { location: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code for the CLI: 2 for data problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RankDeficient { .. } | Error::Divergence { .. } | Error::Curvature => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
