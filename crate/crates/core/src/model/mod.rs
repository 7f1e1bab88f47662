//! Domain types and closed-form collapsed probabilities of the multi-view
//! latent variable model.

mod dataset;
mod likelihood;
mod params;
mod stats;

pub use dataset::{MultiViewDataset, ViewBlock};
pub use likelihood::{
    alpha_posterior, compute_latent_stats, joint_log_likelihood, latent_posterior,
    marginal_log_likelihood, partition_log_prior,
};
pub(crate) use likelihood::check_state;
pub use params::{AssignmentState, Hyperparameters, ProjectionSet};
pub use stats::{GroupStats, LatentStats, ViewTerms};
pub(crate) use stats::ln_2pi;
