//! Sufficient statistics of the collapsed model.
//!
//! Every view `(n, d)` contributes a Gram matrix `W_dᵀW_d`, a projected
//! observation `W_dᵀx_nd` and a squared norm `x_ndᵀx_nd`, all restricted to
//! the observed rows of `x_nd`. A latent vector accumulates the contributions
//! of the views assigned to it on top of the prior precision `r·I`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::function::gamma::ln_gamma;

use super::dataset::MultiViewDataset;
use super::params::{AssignmentState, Hyperparameters, ProjectionSet};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Per-view contributions under a fixed projection set.
#[derive(Debug, Clone)]
pub struct ViewTerms {
    k: usize,
    n_views: usize,
    // Grams for fully observed rows come first (one per view); rows with
    // missing cells get their own entry.
    grams: Vec<DMatrix<f64>>,
    gram_idx: Vec<usize>,
    proj: Vec<DVector<f64>>,
    sq: Vec<f64>,
    n_obs: Vec<usize>,
}

impl ViewTerms {
    pub fn new(data: &MultiViewDataset, proj: &ProjectionSet) -> Result<Self> {
        let k = proj.k();
        proj.check_against(&data.view_dims(), k)?;
        let n_views = data.n_views();
        let n = data.n_instances();
        let mut grams: Vec<DMatrix<f64>> = proj.views().iter().map(|w| w.tr_mul(w)).collect();
        let mut gram_idx = vec![0; n * n_views];
        let mut proj_terms = Vec::with_capacity(n * n_views);
        let mut sq = vec![0.0; n * n_views];
        let mut n_obs = vec![0; n * n_views];

        for i in 0..n {
            for d in 0..n_views {
                let view = data.view(d);
                let w = proj.view(d);
                let idx = i * n_views + d;
                if view.row_fully_observed(i) {
                    let x = view.values().row(i).transpose();
                    gram_idx[idx] = d;
                    proj_terms.push(w.tr_mul(&x));
                    sq[idx] = x.norm_squared();
                    n_obs[idx] = view.dim();
                } else {
                    let mut gram = DMatrix::zeros(k, k);
                    let mut h = DVector::zeros(k);
                    let mut s = 0.0;
                    let mut count = 0;
                    for m in 0..view.dim() {
                        if !view.is_observed(i, m) {
                            continue;
                        }
                        let row = w.row(m);
                        let x = view.value(i, m);
                        gram += row.transpose() * row;
                        h += row.transpose() * x;
                        s += x * x;
                        count += 1;
                    }
                    gram_idx[idx] = grams.len();
                    grams.push(gram);
                    proj_terms.push(h);
                    sq[idx] = s;
                    n_obs[idx] = count;
                }
            }
        }
        Ok(Self {
            k,
            n_views,
            grams,
            gram_idx,
            proj: proj_terms,
            sq,
            n_obs,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn idx(&self, n: usize, d: usize) -> usize {
        n * self.n_views + d
    }

    pub fn gram(&self, n: usize, d: usize) -> &DMatrix<f64> {
        &self.grams[self.gram_idx[self.idx(n, d)]]
    }

    pub fn projected(&self, n: usize, d: usize) -> &DVector<f64> {
        &self.proj[self.idx(n, d)]
    }

    pub fn sq_norm(&self, n: usize, d: usize) -> f64 {
        self.sq[self.idx(n, d)]
    }

    pub fn n_observed(&self, n: usize, d: usize) -> usize {
        self.n_obs[self.idx(n, d)]
    }

    pub fn total_observed(&self) -> usize {
        self.n_obs.iter().sum()
    }

    pub fn total_sq(&self) -> f64 {
        self.sq.iter().sum()
    }
}

/// Posterior quantities of one occupied latent vector.
#[derive(Debug, Clone)]
pub struct GroupStats {
    precision: DMatrix<f64>,
    proj_sum: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    mean: DVector<f64>,
    quad: f64,
    log_det_precision: f64,
}

impl GroupStats {
    /// `precision = r·I + Σ grams`, `proj_sum = Σ W_dᵀx_nd`.
    pub(crate) fn from_parts(precision: DMatrix<f64>, proj_sum: DVector<f64>) -> Option<Self> {
        let chol = Cholesky::new(precision.clone())?;
        let mean = chol.solve(&proj_sum);
        let quad = proj_sum.dot(&mean);
        let log_det_precision = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det_precision.is_finite() || !quad.is_finite() {
            return None;
        }
        Some(Self {
            precision,
            proj_sum,
            chol,
            mean,
            quad,
            log_det_precision,
        })
    }

    pub(crate) fn from_members(
        terms: &ViewTerms,
        r: f64,
        n: usize,
        members: impl Iterator<Item = usize>,
    ) -> Option<Self> {
        let k = terms.k();
        let mut precision = DMatrix::identity(k, k) * r;
        let mut proj_sum = DVector::zeros(k);
        for d in members {
            precision += terms.gram(n, d);
            proj_sum += terms.projected(n, d);
        }
        Self::from_parts(precision, proj_sum)
    }

    /// `C⁻¹`.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn proj_sum(&self) -> &DVector<f64> {
        &self.proj_sum
    }

    /// `μ`.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// `μᵀC⁻¹μ`.
    pub fn quad(&self) -> f64 {
        self.quad
    }

    /// `log|C⁻¹|`.
    pub fn log_det_precision(&self) -> f64 {
        self.log_det_precision
    }

    /// `C`, the covariance scale of the latent posterior.
    pub fn covariance_scale(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// Collapsed sufficient statistics for a whole dataset under one assignment
/// state and projection set.
#[derive(Debug, Clone)]
pub struct LatentStats {
    a: f64,
    b: f64,
    r: f64,
    k: usize,
    groups: Vec<Vec<GroupStats>>,
    sum_sq: f64,
    sum_quad: f64,
    observed_cells: usize,
}

impl LatentStats {
    pub(crate) fn build(terms: &ViewTerms, state: &AssignmentState, hyper: &Hyperparameters) -> Result<Self> {
        let mut groups = Vec::with_capacity(state.n_instances());
        for n in 0..state.n_instances() {
            let mut row = Vec::with_capacity(state.n_latent(n));
            for j in 0..state.n_latent(n) {
                let g = GroupStats::from_members(terms, hyper.r, n, state.members(n, j))
                    .ok_or(Error::NotPositiveDefinite { n, j })?;
                row.push(g);
            }
            groups.push(row);
        }
        let sum_quad = groups.iter().flatten().map(GroupStats::quad).sum();
        Ok(Self {
            a: hyper.a,
            b: hyper.b,
            r: hyper.r,
            k: terms.k(),
            groups,
            sum_sq: terms.total_sq(),
            sum_quad,
            observed_cells: terms.total_observed(),
        })
    }

    pub fn n_instances(&self) -> usize {
        self.groups.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn group(&self, n: usize, j: usize) -> Option<&GroupStats> {
        self.groups.get(n).and_then(|row| row.get(j))
    }

    pub fn groups(&self, n: usize) -> &[GroupStats] {
        &self.groups[n]
    }

    pub fn observed_cells(&self) -> usize {
        self.observed_cells
    }

    /// `a′ = a + (observed cells)/2`.
    pub fn a_prime(&self) -> f64 {
        self.a + 0.5 * self.observed_cells as f64
    }

    /// `b′ = b + ½Σxᵀx − ½ΣμᵀC⁻¹μ`.
    pub fn b_prime(&self) -> f64 {
        // The residual is a sum of ridge least-squares objectives and hence
        // nonnegative; clamp away rounding noise.
        self.b + 0.5 * (self.sum_sq - self.sum_quad).max(0.0)
    }

    /// Posterior mean of the noise precision, `a′/b′`.
    pub fn alpha_mean(&self) -> f64 {
        self.a_prime() / self.b_prime()
    }

    pub fn total_latent(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Log of the collapsed marginal likelihood `p(X | S, W, a, b, r)`.
    pub fn log_marginal(&self) -> f64 {
        let a_prime = self.a_prime();
        let b_prime = self.b_prime();
        let half_log_det_c: f64 = -0.5
            * self
                .groups
                .iter()
                .flatten()
                .map(GroupStats::log_det_precision)
                .sum::<f64>();
        -0.5 * self.observed_cells as f64 * LN_2PI
            + 0.5 * (self.k * self.total_latent()) as f64 * self.r.ln()
            + self.a * self.b.ln()
            - a_prime * b_prime.ln()
            + ln_gamma(a_prime)
            - ln_gamma(self.a)
            + half_log_det_c
    }

    // Incremental bookkeeping used by the Gibbs sampler.

    pub(crate) fn take_view(&mut self, terms: &ViewTerms, n: usize, d: usize) {
        self.sum_sq -= terms.sq_norm(n, d);
        self.observed_cells -= terms.n_observed(n, d);
    }

    pub(crate) fn give_view(&mut self, terms: &ViewTerms, n: usize, d: usize) {
        self.sum_sq += terms.sq_norm(n, d);
        self.observed_cells += terms.n_observed(n, d);
    }

    pub(crate) fn remove_group(&mut self, n: usize, j: usize) {
        let g = self.groups[n].remove(j);
        self.sum_quad -= g.quad;
    }

    pub(crate) fn replace_group(&mut self, n: usize, j: usize, g: GroupStats) {
        self.sum_quad += g.quad - self.groups[n][j].quad;
        self.groups[n][j] = g;
    }

    pub(crate) fn push_group(&mut self, n: usize, g: GroupStats) {
        self.sum_quad += g.quad;
        self.groups[n].push(g);
    }
}

pub(crate) fn ln_2pi() -> f64 {
    LN_2PI
}
