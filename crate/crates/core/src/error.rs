use thiserror::Error;

/// Where a positive-definite factorization was attempted when it failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdStage {
    Construct,
    Covariance,
    Precision,
    WishartScale,
    Inverse,
}

impl std::fmt::Display for PdStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PdStage::Construct => "construct",
            PdStage::Covariance => "covariance",
            PdStage::Precision => "precision",
            PdStage::WishartScale => "wishart-scale",
            PdStage::Inverse => "inverse",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("matrix not positive definite at stage {stage} (min diagonal {min_diag:e})")]
    NumericalPd { min_diag: f64, stage: PdStage },

    #[error("invalid sampler state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
