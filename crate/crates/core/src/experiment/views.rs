use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{MultiViewDataset, ViewBlock};

/// A dataset built by splitting feature columns into views.
#[derive(Debug, Clone)]
pub struct ViewSplit {
    pub data: MultiViewDataset,
    /// Original column indices of each view, ascending.
    pub groups: Vec<Vec<usize>>,
    /// Constant columns removed before splitting.
    pub dropped: Vec<usize>,
}

/// Randomly partitions the non-constant feature columns into `n_views`
/// groups whose sizes differ by at most one, z-scoring every column.
pub fn split_views<R: Rng + ?Sized>(features: &DMatrix<f64>, n_views: usize, rng: &mut R) -> Result<ViewSplit> {
    if n_views == 0 {
        return Err(Error::InvalidConfig("number of views must be at least 1".into()));
    }
    let n = features.nrows();
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    let mut moments = Vec::with_capacity(features.ncols());
    for j in 0..features.ncols() {
        let col = features.column(j);
        let mean = if n == 0 { 0.0 } else { col.sum() / n as f64 };
        let var = if n == 0 {
            0.0
        } else {
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
        };
        let sd = var.sqrt();
        moments.push((mean, sd));
        if sd > 0.0 && sd.is_finite() {
            keep.push(j);
        } else {
            dropped.push(j);
        }
    }
    if keep.len() < n_views {
        return Err(Error::InvalidConfig(format!(
            "{n_views} views requested but only {} non-constant features",
            keep.len()
        )));
    }
    keep.shuffle(rng);
    let mut groups = vec![Vec::new(); n_views];
    for (i, j) in keep.into_iter().enumerate() {
        groups[i % n_views].push(j);
    }
    for g in groups.iter_mut() {
        g.sort_unstable();
    }
    let blocks = groups
        .iter()
        .map(|cols| {
            ViewBlock::fully_observed(DMatrix::from_fn(n, cols.len(), |i, c| {
                let (mean, sd) = moments[cols[c]];
                (features[(i, cols[c])] - mean) / sd
            }))
        })
        .collect();
    Ok(ViewSplit {
        data: MultiViewDataset::new(blocks, None)?,
        groups,
        dropped,
    })
}

/// Number of anomalous instances implied by a rate, which must be a whole
/// even number.
pub fn swap_anomaly_count(n_instances: usize, anomaly_rate: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&anomaly_rate) {
        return Err(Error::InvalidConfig(format!(
            "anomaly rate must lie in [0, 1), got {anomaly_rate}"
        )));
    }
    let exact = anomaly_rate * n_instances as f64;
    let count = exact.round();
    if (exact - count).abs() > 1e-9 || !(count as usize).is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "anomaly rate {anomaly_rate} on {n_instances} instances gives {exact} anomalies; \
             swaps need an even whole number"
        )));
    }
    Ok(count as usize)
}

/// Creates multi-view anomalies by exchanging one randomly chosen view
/// between randomly paired instances. Both members of a pair are labelled
/// anomalous. Each view's multiset of rows is unchanged.
pub fn inject_swap_anomalies<R: Rng + ?Sized>(
    data: &MultiViewDataset,
    anomaly_rate: f64,
    rng: &mut R,
) -> Result<(MultiViewDataset, Vec<bool>)> {
    let n = data.n_instances();
    let count = swap_anomaly_count(n, anomaly_rate)?;
    let mut labels = vec![false; n];
    let mut out = data.clone();
    if count == 0 {
        return Ok((out.with_labels(labels)?, vec![false; n]));
    }
    if data.n_views() < 2 {
        return Err(Error::InvalidConfig("swap anomalies need at least two views".into()));
    }
    if count > n {
        return Err(Error::InvalidConfig(format!(
            "{count} anomalies requested from {n} instances"
        )));
    }
    let mut chosen = sample(rng, n, count).into_vec();
    chosen.shuffle(rng);
    for pair in chosen.chunks_exact(2) {
        let (p, q) = (pair[0], pair[1]);
        let d = rng.random_range(0..data.n_views());
        let view = out.view_mut(d);
        view.values_mut().swap_rows(p, q);
        view.mask_mut().swap_rows(p, q);
        labels[p] = true;
        labels[q] = true;
    }
    Ok((out.with_labels(labels.clone())?, labels))
}
