use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("invalid projection set: {0}")]
    InvalidProjection(String),

    #[error("invalid assignment state: {0}")]
    InvalidAssignment(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("latent vector {j} of instance {n} is not occupied")]
    UnoccupiedLatent { n: usize, j: usize },

    #[error("posterior precision for instance {n}, latent vector {j} is not positive definite")]
    NotPositiveDefinite { n: usize, j: usize },

    #[error("empty trace: no retained sweeps")]
    EmptyTrace,

    #[error("view {0} has no observed cells; its projection is unidentifiable")]
    UnidentifiableView(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Experiment(String),

    #[error("unsupported artifact: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
