#![allow(dead_code)]

use mvad_core::{AssignmentState, Hyperparameters, MultiViewDataset, ProjectionSet, ViewBlock};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Uniform(-1, 1) data with each cell missing with probability `p_missing`
/// (every row keeps at least one observed cell).
pub fn random_problem<R: Rng>(
    rng: &mut R,
    n: usize,
    dims: &[usize],
    k: usize,
    p_missing: f64,
) -> (MultiViewDataset, ProjectionSet) {
    let proj = ProjectionSet::random(dims, k, 1.0, rng);
    let blocks = dims
        .iter()
        .map(|&m| {
            let values = DMatrix::from_fn(n, m, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let mut observed = DMatrix::from_fn(n, m, |_, _| rng.random::<f64>() >= p_missing);
            for i in 0..n {
                if !observed.row(i).iter().any(|&o| o) {
                    observed[(i, rng.random_range(0..m))] = true;
                }
            }
            ViewBlock::new(values, observed).unwrap()
        })
        .collect();
    (MultiViewDataset::new(blocks, None).unwrap(), proj)
}

pub fn random_state<R: Rng>(rng: &mut R, n: usize, d: usize) -> AssignmentState {
    let labels = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(0..d)).collect())
        .collect();
    AssignmentState::from_labels(labels).unwrap()
}

pub fn random_hyper<R: Rng>(rng: &mut R, k: usize) -> Hyperparameters {
    Hyperparameters::new(
        rng.random_range(0.5..3.0),
        rng.random_range(0.5..3.0),
        rng.random_range(0.5..2.0),
        rng.random_range(0.3..3.0),
        k,
    )
    .unwrap()
}

/// Observed values of instance `n` in the views of `group`, stacked, with
/// the matching rows of the projections.
pub fn stacked(
    data: &MultiViewDataset,
    proj: &ProjectionSet,
    n: usize,
    group: &[usize],
) -> (DVector<f64>, DMatrix<f64>) {
    let k = proj.k();
    let mut xs = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for &d in group {
        let view = data.view(d);
        for m in 0..view.dim() {
            if view.is_observed(n, m) {
                xs.push(view.value(n, m));
                rows.push(proj.view(d).row(m).iter().copied().collect());
            }
        }
    }
    let w = DMatrix::from_fn(rows.len(), k, |i, c| rows[i][c]);
    (DVector::from_vec(xs), w)
}

/// Per instance, the views grouped by latent vector.
pub fn groups(state: &AssignmentState, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); state.n_latent(n)];
    for (d, &j) in state.assignments(n).iter().enumerate() {
        out[j].push(d);
    }
    out
}

/// Observation-space covariances `I + W Wᵀ / r` of every occupied group
/// (times `1/α`), with the stacked observations.
pub fn group_covariances(
    data: &MultiViewDataset,
    state: &AssignmentState,
    proj: &ProjectionSet,
    r: f64,
) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    let mut out = Vec::new();
    for n in 0..data.n_instances() {
        for g in groups(state, n) {
            let (x, w) = stacked(data, proj, n, &g);
            let m = x.len();
            let cov = DMatrix::identity(m, m) + &w * w.transpose() / r;
            out.push((x, cov));
        }
    }
    out
}

/// Marginal log-likelihood computed in observation space: each group's
/// stacked views are `N(0, α⁻¹ (I + W Wᵀ/r))` given `α`, and the Gamma
/// prior on `α` is integrated in closed form.
pub fn dense_marginal(
    data: &MultiViewDataset,
    state: &AssignmentState,
    proj: &ProjectionSet,
    hyper: &Hyperparameters,
) -> f64 {
    let mut obs = 0.0;
    let mut log_det = 0.0;
    let mut quad = 0.0;
    for (x, cov) in group_covariances(data, state, proj, hyper.r) {
        obs += x.len() as f64;
        let chol = cov.cholesky().expect("covariance is positive definite");
        log_det += 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        quad += x.dot(&chol.solve(&x));
    }
    let (a, b) = (hyper.a, hyper.b);
    let a_post = a + 0.5 * obs;
    -0.5 * obs * LN_2PI - 0.5 * log_det + a * b.ln() - ln_gamma(a) + ln_gamma(a_post)
        - a_post * (b + 0.5 * quad).ln()
}

/// Chinese-restaurant partition probability computed sequentially: view `d`
/// joins an existing block with probability `size / (d + γ)` and opens a new
/// one with probability `γ / (d + γ)`.
pub fn sequential_crp(labels: &[usize], gamma: f64) -> f64 {
    let mut sizes: Vec<usize> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    let mut logp = 0.0;
    for (d, &l) in labels.iter().enumerate() {
        let denom = d as f64 + gamma;
        match seen.iter().position(|&s| s == l) {
            Some(i) => {
                logp += (sizes[i] as f64 / denom).ln();
                sizes[i] += 1;
            }
            None => {
                logp += (gamma / denom).ln();
                seen.push(l);
                sizes.push(1);
            }
        }
    }
    logp
}

/// All set partitions of `d` items as restricted growth strings.
pub fn set_partitions(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, d: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == d {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            prefix.push(l);
            rec(prefix, d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), d, &mut out);
    out
}

pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(rest, prefix, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut (0..d).collect(), &mut Vec::new(), &mut out);
    out
}

/// Labels of instance `n` after moving view `d` to candidate `c`, using the
/// candidate order of the conditional: the remaining latent vectors in
/// order of their compacted labels, then a new one.
pub fn candidate_labels(state: &AssignmentState, n: usize, d: usize, c: usize) -> Vec<usize> {
    let labels = state.assignments(n);
    let own = labels[d];
    let emptied = labels.iter().enumerate().all(|(e, &l)| e == d || l != own);
    let compact = |l: usize| if emptied && l > own { l - 1 } else { l };
    labels
        .iter()
        .enumerate()
        .map(|(e, &l)| if e == d { c } else { compact(l) })
        .collect()
}

pub fn with_instance_labels(state: &AssignmentState, n: usize, labels: Vec<usize>) -> AssignmentState {
    let mut all = state.all_assignments().to_vec();
    all[n] = labels;
    AssignmentState::from_labels(all).unwrap()
}

pub fn log_normalize(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    values.iter().map(|v| v - lse).collect()
}
