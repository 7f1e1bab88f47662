//! Synthetic data drawn from the linear-Gaussian multi-view model.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MultiViewDataset, ProjectionSet};

/// Default observation noise standard deviation for multi-view data.
pub const DEFAULT_NOISE_SD: f64 = 0.1;

/// Default noise for single-view anomaly data: unit precision, the prior
/// mean of `α` under `a = b = 1`.
pub const SINGLE_VIEW_NOISE_SD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaParams {
    pub n_instances: usize,
    pub view_dims: Vec<usize>,
    pub k_star: usize,
    pub anomaly_rate: f64,
    pub noise_sd: f64,
}

impl Default for CcaParams {
    fn default() -> Self {
        Self {
            n_instances: 100,
            view_dims: vec![10, 10],
            k_star: 5,
            anomaly_rate: 0.2,
            noise_sd: DEFAULT_NOISE_SD,
        }
    }
}

/// How the latent scale of single-view anomalies is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatentScale {
    /// The latent covariance is `scale · I`.
    Covariance,
    /// The latent standard deviation is `scale`.
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleViewParams {
    pub n_normal: usize,
    pub n_anomalous: usize,
    /// Dimensionality of every view.
    pub view_dim: usize,
    pub n_views: usize,
    pub k: usize,
    pub variance_scale: f64,
    pub scale_kind: LatentScale,
    pub noise_sd: f64,
}

impl Default for SingleViewParams {
    fn default() -> Self {
        Self {
            n_normal: 95,
            n_anomalous: 5,
            view_dim: 5,
            n_views: 2,
            k: 3,
            variance_scale: 10f64.sqrt(),
            scale_kind: LatentScale::Covariance,
            noise_sd: SINGLE_VIEW_NOISE_SD,
        }
    }
}

/// Generated data together with the ground truth used to produce it.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub data: MultiViewDataset,
    pub labels: Vec<bool>,
    pub projections: ProjectionSet,
    /// Latent vector that generated each view of each instance (`N x D`).
    pub latents: Vec<Vec<DVector<f64>>>,
}

fn std_normal_vec<R: Rng + ?Sized>(k: usize, sd: f64, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(k, |_, _| {
        let e: f64 = StandardNormal.sample(rng);
        sd * e
    })
}

fn generate<R: Rng + ?Sized>(
    view_dims: &[usize],
    projections: ProjectionSet,
    latents: Vec<Vec<DVector<f64>>>,
    labels: Vec<bool>,
    noise_sd: f64,
    rng: &mut R,
) -> Result<SyntheticData> {
    let n = latents.len();
    let mut blocks: Vec<DMatrix<f64>> = view_dims.iter().map(|&m| DMatrix::zeros(n, m)).collect();
    for (i, per_view) in latents.iter().enumerate() {
        for (d, z) in per_view.iter().enumerate() {
            let clean = projections.view(d) * z;
            for m in 0..view_dims[d] {
                let eps: f64 = StandardNormal.sample(rng);
                blocks[d][(i, m)] = clean[m] + noise_sd * eps;
            }
        }
    }
    let data = MultiViewDataset::from_dense(blocks)?.with_labels(labels.clone())?;
    Ok(SyntheticData {
        data,
        labels,
        projections,
        latents,
    })
}

/// Draws `W_d` with standard normal entries, one `z ~ N(0, I)` per normal
/// instance and two per anomaly (views split into two random non-empty
/// blocks), then `x_nd = W_d z + ε` with `ε ~ N(0, noise_sd² I)`.
pub fn gen_synthetic_cca<R: Rng + ?Sized>(params: &CcaParams, rng: &mut R) -> Result<SyntheticData> {
    let n = params.n_instances;
    let d_views = params.view_dims.len();
    if params.k_star == 0 || d_views == 0 || params.view_dims.contains(&0) {
        return Err(Error::InvalidConfig("k_star, views and view dims must be positive".into()));
    }
    if !(0.0..1.0).contains(&params.anomaly_rate) || !(params.noise_sd >= 0.0) {
        return Err(Error::InvalidConfig("anomaly rate must lie in [0, 1) and noise_sd >= 0".into()));
    }
    let n_anom = (params.anomaly_rate * n as f64).round() as usize;
    if n_anom > 0 && d_views < 2 {
        return Err(Error::InvalidConfig("multi-view anomalies need at least two views".into()));
    }
    let k = params.k_star;
    let projections = ProjectionSet::random(&params.view_dims, k, 1.0, rng);
    let mut labels = vec![false; n];
    for i in sample(rng, n, n_anom) {
        labels[i] = true;
    }
    let latents = labels
        .iter()
        .map(|&anomalous| {
            if anomalous {
                let blocks = two_block_partition(d_views, rng);
                let zs = [std_normal_vec(k, 1.0, rng), std_normal_vec(k, 1.0, rng)];
                blocks.into_iter().map(|b| zs[b].clone()).collect()
            } else {
                let z = std_normal_vec(k, 1.0, rng);
                vec![z; d_views]
            }
        })
        .collect();
    generate(&params.view_dims, projections, latents, labels, params.noise_sd, rng)
}

/// Random assignment of `d` views to blocks 0 and 1, both non-empty.
fn two_block_partition<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<usize> {
    if d == 2 {
        return vec![0, 1];
    }
    loop {
        let blocks: Vec<usize> = (0..d).map(|_| rng.random_range(0..2)).collect();
        if blocks.contains(&0) && blocks.contains(&1) {
            return blocks;
        }
    }
}

/// Instances with a single latent vector each; anomalies draw theirs with an
/// inflated scale, so they are outliers within every view but consistent
/// across views.
pub fn gen_single_view_anomalies<R: Rng + ?Sized>(
    params: &SingleViewParams,
    rng: &mut R,
) -> Result<SyntheticData> {
    if params.k == 0 || params.view_dim == 0 || params.n_views == 0 {
        return Err(Error::InvalidConfig("k, view_dim and n_views must be positive".into()));
    }
    if !(params.variance_scale > 0.0) || !(params.noise_sd >= 0.0) {
        return Err(Error::InvalidConfig("variance_scale must be positive".into()));
    }
    let n = params.n_normal + params.n_anomalous;
    let dims = vec![params.view_dim; params.n_views];
    let projections = ProjectionSet::random(&dims, params.k, 1.0, rng);
    let mut labels = vec![false; n];
    for i in sample(rng, n, params.n_anomalous) {
        labels[i] = true;
    }
    let anomaly_sd = match params.scale_kind {
        LatentScale::Covariance => params.variance_scale.sqrt(),
        LatentScale::StdDev => params.variance_scale,
    };
    let latents = labels
        .iter()
        .map(|&anomalous| {
            let sd = if anomalous { anomaly_sd } else { 1.0 };
            vec![std_normal_vec(params.k, sd, rng); params.n_views]
        })
        .collect();
    generate(&dims, projections, latents, labels, params.noise_sd, rng)
}
