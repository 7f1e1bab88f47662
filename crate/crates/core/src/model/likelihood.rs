use nalgebra::{DMatrix, DVector};

use super::dataset::MultiViewDataset;
use super::params::{AssignmentState, Hyperparameters, ProjectionSet};
use super::stats::{LatentStats, ViewTerms};
use crate::error::{Error, Result};

/// Log of the Chinese-restaurant partition prior `p(S | γ)`, summed over
/// instances. Depends only on the block sizes of each instance's partition.
pub fn partition_log_prior(state: &AssignmentState, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidHyperparameter(format!(
            "DP concentration must be positive, got {gamma}"
        )));
    }
    let d = state.n_views();
    let log_gamma = gamma.ln();
    let log_rising: f64 = (0..d).map(|i| (gamma + i as f64).ln()).sum();
    let mut total = 0.0;
    for n in 0..state.n_instances() {
        let counts = state.counts(n);
        let log_fact: f64 = counts.iter().map(|&c| ln_factorial(c - 1)).sum();
        total += counts.len() as f64 * log_gamma + log_fact - log_rising;
    }
    Ok(total)
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Posterior precision and mean of every occupied latent vector plus the
/// posterior Gamma parameters of the noise precision.
pub fn compute_latent_stats(
    data: &MultiViewDataset,
    state: &AssignmentState,
    proj: &ProjectionSet,
    hyper: &Hyperparameters,
) -> Result<LatentStats> {
    hyper.validate()?;
    check_state(data, state)?;
    if proj.k() != hyper.k {
        return Err(Error::InvalidProjection(format!(
            "projection has {} latent columns, hyperparameters say k = {}",
            proj.k(),
            hyper.k
        )));
    }
    let terms = ViewTerms::new(data, proj)?;
    LatentStats::build(&terms, state, hyper)
}

pub(crate) fn check_state(data: &MultiViewDataset, state: &AssignmentState) -> Result<()> {
    if state.n_instances() != data.n_instances()
        || (state.n_instances() > 0 && state.n_views() != data.n_views())
    {
        return Err(Error::InvalidAssignment(format!(
            "state covers {} instances x {} views, dataset has {} x {}",
            state.n_instances(),
            state.n_views(),
            data.n_instances(),
            data.n_views()
        )));
    }
    state.validate()
}

/// `log p(X | S, W, a, b, r)` with latent vectors and noise precision
/// integrated out.
pub fn marginal_log_likelihood(
    data: &MultiViewDataset,
    state: &AssignmentState,
    proj: &ProjectionSet,
    hyper: &Hyperparameters,
) -> Result<f64> {
    Ok(compute_latent_stats(data, state, proj, hyper)?.log_marginal())
}

/// `log p(X, S | W, a, b, r, γ)`.
pub fn joint_log_likelihood(
    data: &MultiViewDataset,
    state: &AssignmentState,
    proj: &ProjectionSet,
    hyper: &Hyperparameters,
) -> Result<f64> {
    Ok(partition_log_prior(state, hyper.gamma)? + marginal_log_likelihood(data, state, proj, hyper)?)
}

/// Shape and rate of the Gamma posterior over the noise precision.
pub fn alpha_posterior(stats: &LatentStats) -> (f64, f64) {
    (stats.a_prime(), stats.b_prime())
}

/// Mean `μ_nj` and covariance scale `C_nj` of the Gaussian posterior over
/// latent vector `j` of instance `n`; the covariance is `α⁻¹·C_nj`.
pub fn latent_posterior(stats: &LatentStats, n: usize, j: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let g = stats.group(n, j).ok_or(Error::UnoccupiedLatent { n, j })?;
    Ok((g.mean().clone(), g.covariance_scale()))
}
