//! Multi-view anomaly detection with a nonparametric Bayesian latent
//! variable model.
//!
//! Each instance owns a Dirichlet-process mixture of latent vectors; every
//! view of the instance is generated by a linear map of one of them. Normal
//! instances explain all views with a single latent vector, while instances
//! whose views disagree need several. Inference is stochastic EM: collapsed
//! Gibbs sampling over view-to-latent assignments alternating with
//! quasi-Newton updates of the projection matrices.

pub mod artifact;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod missing;
pub mod model;

pub use error::{Error, Result};
pub use inference::{
    anomaly_scores, reconstruction_scores, run_stochastic_em, AnomalyScores, FitResult,
    GibbsTrace, InferenceConfig,
};
pub use missing::{impute, select_latent_dim, ImputationResult};
pub use model::{
    AssignmentState, Hyperparameters, LatentStats, MultiViewDataset, ProjectionSet, ViewBlock,
};
