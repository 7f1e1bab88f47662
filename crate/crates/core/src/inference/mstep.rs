//! Projection-matrix updates: exact gradient of the collapsed joint
//! log-likelihood and its quasi-Newton maximization at fixed assignments.

use nalgebra::DMatrix;

use super::lbfgs::{minimize, LbfgsOptions, Termination};
use crate::error::Result;
use crate::model::{
    compute_latent_stats, partition_log_prior, AssignmentState, Hyperparameters, LatentStats,
    MultiViewDataset, ProjectionSet,
};

/// Gradient of `log p(X, S | W)` with respect to every `W_d`.
///
/// For each instance only the latent vector that view `d` is assigned to
/// depends on `W_d`, so the determinant term is `−W_d Σ_n C_{n,s_nd}`. The
/// second term carries the dependence through `b′` and is scaled by `a′/b′`.
/// Rows of `W_d` for cells missing in instance `n` receive nothing from `n`.
pub fn joint_gradient(
    data: &MultiViewDataset,
    state: &AssignmentState,
    stats: &LatentStats,
    proj: &ProjectionSet,
) -> Vec<DMatrix<f64>> {
    let kappa = stats.alpha_mean();
    let k = proj.k();
    let weighted: Vec<Vec<DMatrix<f64>>> = (0..stats.n_instances())
        .map(|n| {
            stats
                .groups(n)
                .iter()
                .map(|g| g.covariance_scale() + g.mean() * g.mean().transpose() * kappa)
                .collect()
        })
        .collect();

    (0..data.n_views())
        .map(|d| {
            let view = data.view(d);
            let w = proj.view(d);
            let mut acc = DMatrix::zeros(k, k);
            let mut grad = DMatrix::zeros(view.dim(), k);
            for n in 0..data.n_instances() {
                let j = state.assignment(n, d);
                let mu = stats.groups(n)[j].mean();
                let t = &weighted[n][j];
                if view.row_fully_observed(n) {
                    acc += t;
                    grad.ger(kappa, &view.values().row(n).transpose(), mu, 1.0);
                } else {
                    for m in 0..view.dim() {
                        if !view.is_observed(n, m) {
                            continue;
                        }
                        let delta = mu.transpose() * (kappa * view.value(n, m)) - w.row(m) * t;
                        let mut row = grad.row_mut(m);
                        row += delta;
                    }
                }
            }
            grad -= w * acc;
            grad
        })
        .collect()
}

/// Gradient with respect to the projection of view `d` alone.
pub fn mstep_gradient(
    data: &MultiViewDataset,
    state: &AssignmentState,
    stats: &LatentStats,
    proj: &ProjectionSet,
    d: usize,
) -> DMatrix<f64> {
    joint_gradient(data, state, stats, proj).swap_remove(d)
}

/// Result of one M-step.
#[derive(Debug, Clone)]
pub struct MStepOutcome {
    pub projections: ProjectionSet,
    pub objective_before: f64,
    pub objective_after: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Option<Termination>,
}

/// Maximizes the joint log-likelihood over all projection matrices with
/// L-BFGS, holding the assignments fixed. The returned objective is never
/// below the incoming one; if the objective cannot be evaluated at the
/// incoming projections they are returned unchanged.
pub fn mstep_optimize(
    data: &MultiViewDataset,
    state: &AssignmentState,
    hyper: &Hyperparameters,
    proj: &ProjectionSet,
    opts: &LbfgsOptions,
) -> Result<MStepOutcome> {
    let log_prior = partition_log_prior(state, hyper.gamma)?;
    let eval = |flat: &[f64]| -> Option<(f64, Vec<f64>)> {
        let w = proj.from_flat_like(flat);
        let stats = compute_latent_stats(data, state, &w, hyper).ok()?;
        let f = log_prior + stats.log_marginal();
        let grad = joint_gradient(data, state, &stats, &w);
        let flat_grad = grad.iter().flat_map(|g| g.iter().map(|v| -v)).collect();
        Some((-f, flat_grad))
    };

    let unchanged = |objective: f64, grad_norm: f64| MStepOutcome {
        projections: proj.clone(),
        objective_before: objective,
        objective_after: objective,
        grad_norm,
        iterations: 0,
        termination: None,
    };

    let Some(report) = minimize(proj.to_flat(), opts, eval) else {
        return Ok(unchanged(f64::NEG_INFINITY, f64::NAN));
    };
    let (f0, _) = eval(&proj.to_flat()).expect("start point evaluated above");
    let objective_before = -f0;
    let objective_after = -report.f;
    if objective_after < objective_before {
        return Ok(unchanged(objective_before, f64::NAN));
    }
    Ok(MStepOutcome {
        projections: proj.from_flat_like(&report.x),
        objective_before,
        objective_after,
        grad_norm: report.grad_norm,
        iterations: report.iterations,
        termination: Some(report.termination),
    })
}
