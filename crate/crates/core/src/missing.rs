//! Missing-value imputation under a fitted model and hold-out selection of
//! the latent dimensionality.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{run_stochastic_em, GibbsTrace, InferenceConfig};
use crate::model::{compute_latent_stats, AssignmentState, Hyperparameters, MultiViewDataset, ProjectionSet};

/// Relative MSE margin within which two latent dimensionalities count as
/// equally good.
pub const K_TIE_TOLERANCE: f64 = 0.02;

/// Default share of observed cells hidden for cross-validation.
pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputedCell {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Posterior predictive mean, averaged over the supplied states.
    pub mean: f64,
    /// `1 + w_m C w_mᵀ`; multiply by `1/α` for the predictive variance.
    pub variance_scale: f64,
}

#[derive(Debug, Clone)]
pub struct ImputationResult {
    /// Input with every missing cell filled and marked observed.
    pub filled: MultiViewDataset,
    pub cells: Vec<ImputedCell>,
}

impl ImputationResult {
    pub fn get(&self, n: usize, d: usize, m: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.d == d && c.m == m)
            .map(|c| c.mean)
    }
}

fn missing_cells(data: &MultiViewDataset) -> Vec<(usize, usize, usize)> {
    let mut cells = Vec::new();
    for n in 0..data.n_instances() {
        for d in 0..data.n_views() {
            let view = data.view(d);
            for m in 0..view.dim() {
                if !view.is_observed(n, m) {
                    cells.push((n, d, m));
                }
            }
        }
    }
    cells
}

fn check_identifiable(data: &MultiViewDataset) -> Result<()> {
    if data.n_instances() == 0 {
        return Ok(());
    }
    for (d, view) in data.views().iter().enumerate() {
        if view.observed_count() == 0 {
            return Err(Error::UnidentifiableView(d));
        }
    }
    Ok(())
}

/// Fills every missing cell with `W_d μ_{n,s_nd}` averaged over `states`.
pub fn impute(
    data: &MultiViewDataset,
    proj: &ProjectionSet,
    states: &[&AssignmentState],
    hyper: &Hyperparameters,
) -> Result<ImputationResult> {
    check_identifiable(data)?;
    if states.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let cells = missing_cells(data);
    let mut means = vec![0.0; cells.len()];
    let mut scales = vec![0.0; cells.len()];
    for state in states {
        let stats = compute_latent_stats(data, state, proj, hyper)?;
        for (i, &(n, d, m)) in cells.iter().enumerate() {
            let g = &stats.groups(n)[state.assignment(n, d)];
            let w = proj.view(d).row(m);
            means[i] += (w * g.mean())[0];
            scales[i] += 1.0 + (w * g.covariance_scale() * w.transpose())[0];
        }
    }
    let h = states.len() as f64;
    let mut filled = data.clone();
    let cells: Vec<ImputedCell> = cells
        .into_iter()
        .zip(means.into_iter().zip(scales))
        .map(|((n, d, m), (mean, scale))| {
            let mean = mean / h;
            filled.view_mut(d).set_value(n, m, mean);
            ImputedCell {
                n,
                d,
                m,
                mean,
                variance_scale: scale / h,
            }
        })
        .collect();
    Ok(ImputationResult { filled, cells })
}

/// Imputation averaged over the retained sweeps of a trace recorded with
/// `record_states`.
pub fn impute_from_trace(
    data: &MultiViewDataset,
    proj: &ProjectionSet,
    trace: &GibbsTrace,
    hyper: &Hyperparameters,
) -> Result<ImputationResult> {
    let states = trace.states().ok_or_else(|| {
        Error::InvalidConfig("trace was recorded without assignment states".into())
    })?;
    impute(data, proj, &states, hyper)
}

/// Imputation from a single (typically final) assignment state.
pub fn impute_from_state(
    data: &MultiViewDataset,
    proj: &ProjectionSet,
    state: &AssignmentState,
    hyper: &Hyperparameters,
) -> Result<ImputationResult> {
    impute(data, proj, &[state], hyper)
}

/// Baseline: every missing cell gets the mean of its column's observed cells
/// (zero if the column has none).
pub fn mean_imputation(data: &MultiViewDataset) -> ImputationResult {
    let col_means: Vec<Vec<f64>> = data
        .views()
        .iter()
        .map(|view| {
            (0..view.dim())
                .map(|m| {
                    let (s, c) = (0..view.n_rows())
                        .filter(|&n| view.is_observed(n, m))
                        .fold((0.0, 0usize), |(s, c), n| (s + view.value(n, m), c + 1));
                    if c == 0 {
                        0.0
                    } else {
                        s / c as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut filled = data.clone();
    let cells = missing_cells(data)
        .into_iter()
        .map(|(n, d, m)| {
            let mean = col_means[d][m];
            filled.view_mut(d).set_value(n, m, mean);
            ImputedCell {
                n,
                d,
                m,
                mean,
                variance_scale: f64::NAN,
            }
        })
        .collect();
    ImputationResult { filled, cells }
}

/// Observed cells hidden from a dataset, with their true values.
#[derive(Debug, Clone)]
pub struct Holdout {
    pub masked: MultiViewDataset,
    pub cells: Vec<(usize, usize, usize)>,
    pub truth: Vec<f64>,
}

impl Holdout {
    /// Mean squared error of an imputation on the hidden cells.
    pub fn mse(&self, result: &ImputationResult) -> f64 {
        let filled = &result.filled;
        let sse: f64 = self
            .cells
            .iter()
            .zip(&self.truth)
            .map(|(&(n, d, m), t)| (filled.view(d).value(n, m) - t).powi(2))
            .sum();
        sse / self.cells.len() as f64
    }
}

/// Hides `round(fraction · observed)` (at least one) randomly chosen
/// observed cells. Cells that are already missing are never selected.
pub fn holdout_cells<R: Rng + ?Sized>(
    data: &MultiViewDataset,
    fraction: f64,
    rng: &mut R,
) -> Result<Holdout> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction must lie in (0, 0.5], got {fraction}"
        )));
    }
    let mut observed = Vec::new();
    for n in 0..data.n_instances() {
        for d in 0..data.n_views() {
            let view = data.view(d);
            for m in 0..view.dim() {
                if view.is_observed(n, m) {
                    observed.push((n, d, m));
                }
            }
        }
    }
    if observed.is_empty() {
        return Err(Error::InvalidDataset("no observed cells to hold out".into()));
    }
    let count = ((fraction * observed.len() as f64).round() as usize).clamp(1, observed.len());
    let mut picked = sample(rng, observed.len(), count).into_vec();
    picked.sort_unstable();
    let mut masked = data.clone();
    let mut cells = Vec::with_capacity(count);
    let mut truth = Vec::with_capacity(count);
    for i in picked {
        let (n, d, m) = observed[i];
        truth.push(data.view(d).value(n, m));
        masked.set_missing(n, d, m);
        cells.push((n, d, m));
    }
    Ok(Holdout { masked, cells, truth })
}

/// Held-out MSE of every candidate and the chosen dimensionality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentDimSelection {
    pub k: usize,
    pub mse: Vec<(usize, f64)>,
}

/// Fits the model for each candidate `k` on data with a random hold-out set
/// hidden and returns the smallest `k` whose held-out MSE is within
/// [`K_TIE_TOLERANCE`] (relative) of the best.
pub fn select_latent_dim(
    data: &MultiViewDataset,
    grid: &[usize],
    hyper: &Hyperparameters,
    config: &InferenceConfig,
    holdout_fraction: f64,
) -> Result<LatentDimSelection> {
    if grid.is_empty() || grid.contains(&0) {
        return Err(Error::InvalidConfig(
            "latent dimensionality grid must be non-empty and positive".into(),
        ));
    }
    let mut grid: Vec<usize> = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_4b1d);
    let holdout = holdout_cells(data, holdout_fraction, &mut rng)?;
    let config = InferenceConfig {
        record_states: true,
        ..config.clone()
    };

    let mse: Vec<(usize, f64)> = grid
        .par_iter()
        .map(|&k| -> Result<(usize, f64)> {
            let hyper = hyper.with_k(k);
            let fit = run_stochastic_em(&holdout.masked, &hyper, &config)?;
            let imputed = impute_from_trace(&holdout.masked, &fit.projections, &fit.trace, &hyper)?;
            Ok((k, holdout.mse(&imputed)))
        })
        .collect::<Result<_>>()?;

    let k = smallest_near_best(&mse).expect("grid is non-empty");
    Ok(LatentDimSelection { k, mse })
}

/// Tie-break used by [`select_latent_dim`], exposed for callers that compute
/// their own MSE curve.
pub fn smallest_near_best(mse: &[(usize, f64)]) -> Option<usize> {
    let best = mse.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    let mut sorted = mse.to_vec();
    sorted.sort_by_key(|&(k, _)| k);
    sorted
        .into_iter()
        .find(|&(_, e)| e <= best * (1.0 + K_TIE_TOLERANCE))
        .map(|(k, _)| k)
}
