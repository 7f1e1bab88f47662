use serde::{Deserialize, Serialize};

use super::em::GibbsTrace;
use crate::error::{Error, Result};

/// Per-instance multi-view anomaly scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScores {
    pub v: Vec<f64>,
}

/// Fraction of retained sweeps in which each instance used more than one
/// latent vector.
pub fn anomaly_scores(trace: &GibbsTrace) -> Result<AnomalyScores> {
    if trace.sweeps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let h = trace.sweeps.len() as f64;
    let mut hits = vec![0usize; trace.n_instances];
    for rec in &trace.sweeps {
        for (acc, &j) in hits.iter_mut().zip(&rec.latent_counts) {
            if j > 1 {
                *acc += 1;
            }
        }
    }
    Ok(AnomalyScores {
        v: hits.into_iter().map(|c| c as f64 / h).collect(),
    })
}

/// Reconstruction-error score: squared error averaged over retained sweeps.
/// This is the score used for the single-latent-vector (PCCA) baseline.
pub fn reconstruction_scores(trace: &GibbsTrace) -> Result<Vec<f64>> {
    if trace.sweeps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let h = trace.sweeps.len() as f64;
    let mut acc = vec![0.0; trace.n_instances];
    for rec in &trace.sweeps {
        for (a, e) in acc.iter_mut().zip(&rec.reconstruction_error) {
            *a += e;
        }
    }
    Ok(acc.into_iter().map(|s| s / h).collect())
}
