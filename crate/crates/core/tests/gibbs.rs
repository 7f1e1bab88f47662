mod common;

use common::*;
use mvad_core::experiment::{gen_synthetic_cca, CcaParams};
use mvad_core::inference::GibbsSampler;
use mvad_core::{AssignmentState, Hyperparameters, MultiViewDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn masked_view(data: &MultiViewDataset, n: usize, d: usize) -> MultiViewDataset {
    let mut out = data.clone();
    for m in 0..data.view(d).dim() {
        out.set_missing(n, d, m);
    }
    out
}

#[test]
fn conditional_factors_match_from_scratch_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for case in 0..150 {
        let n_inst = rng.random_range(1..4);
        let n_views = rng.random_range(2..5);
        let k = rng.random_range(1..4);
        let dims: Vec<usize> = (0..n_views).map(|_| rng.random_range(1..4)).collect();
        let p_missing = if case % 3 == 0 { 0.3 } else { 0.0 };
        let (data, proj) = random_problem(&mut rng, n_inst, &dims, k, p_missing);
        let state = random_state(&mut rng, n_inst, n_views);
        let hyper = random_hyper(&mut rng, k);
        let n = rng.random_range(0..n_inst);
        let d = rng.random_range(0..n_views);

        let mut sampler = GibbsSampler::new(&data, state.clone(), &proj, hyper).unwrap();
        let w = sampler.conditional_weights(n, d).unwrap();

        let without = dense_marginal(&masked_view(&data, n, d), &state, &proj, &hyper);
        let mut rest: Vec<usize> = state.assignments(n).to_vec();
        rest.remove(d);
        let crp_without = sequential_crp(&rest, hyper.gamma);
        let mut scratch = Vec::new();
        for c in 0..w.len() {
            let labels = candidate_labels(&state, n, d, c);
            let moved = with_instance_labels(&state, n, labels.clone());
            let lik = dense_marginal(&data, &moved, &proj, &hyper) - without;
            assert!(
                (w.log_likelihood[c] - lik).abs() < 1e-8,
                "case {case}, candidate {c}: {} vs {lik}",
                w.log_likelihood[c]
            );
            let mut order = labels.clone();
            let own = order.remove(d);
            order.push(own);
            let prior = sequential_crp(&order, hyper.gamma) - crp_without;
            assert!((w.log_prior[c] - prior).abs() < 1e-12, "case {case}, candidate {c}");
            scratch.push(lik + prior);
        }
        for (a, b) in w.log_probs().iter().zip(log_normalize(&scratch)) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

/// Exact posterior over all joint partitions versus long-run sampler
/// frequencies.
#[test]
fn sampler_targets_the_exact_posterior() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (data, proj) = random_problem(&mut rng, 2, &[2, 1, 2], 1, 0.0);
    let hyper = Hyperparameters::new(1.0, 1.0, 1.0, 1.5, 1).unwrap();
    let parts = set_partitions(3);
    let mut states = Vec::new();
    let mut logp = Vec::new();
    for p in &parts {
        for q in &parts {
            let s = AssignmentState::from_labels(vec![p.clone(), q.clone()]).unwrap();
            let prior = sequential_crp(p, hyper.gamma) + sequential_crp(q, hyper.gamma);
            logp.push(prior + dense_marginal(&data, &s, &proj, &hyper));
            states.push(s);
        }
    }
    let exact: Vec<f64> = log_normalize(&logp).iter().map(|v| v.exp()).collect();

    let mut sampler = GibbsSampler::new(&data, AssignmentState::single(2, 3), &proj, hyper).unwrap();
    let mut counts = vec![0usize; states.len()];
    let sweeps = 60_000;
    for _ in 0..sweeps {
        sampler.sweep(&mut rng, false).unwrap();
        let canonical = AssignmentState::from_labels(sampler.state().all_assignments().to_vec()).unwrap();
        let i = states.iter().position(|s| *s == canonical).unwrap();
        counts[i] += 1;
    }
    for (i, (&c, &p)) in counts.iter().zip(&exact).enumerate() {
        let freq = c as f64 / sweeps as f64;
        // generous bound for autocorrelated draws
        let tol = 6.0 * (p * (1.0 - p) / sweeps as f64).sqrt() * 3.0 + 1e-3;
        assert!((freq - p).abs() < tol, "state {i}: {freq} vs {p}");
    }
}

#[test]
fn vanishing_concentration_merges_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = gen_synthetic_cca(
        &CcaParams {
            n_instances: 30,
            view_dims: vec![4, 4, 3],
            k_star: 2,
            anomaly_rate: 0.0,
            noise_sd: 0.1,
        },
        &mut rng,
    )
    .unwrap();
    let hyper = Hyperparameters::new(1.0, 1.0, 1.0, 1e-10, 2).unwrap();
    let mut sampler = GibbsSampler::new(&s.data, AssignmentState::all_distinct(30, 3), &s.projections, hyper).unwrap();
    for _ in 0..3 {
        sampler.sweep(&mut rng, false).unwrap();
    }
    assert!(sampler.state().latent_counts().iter().all(|&j| j == 1));
}

#[test]
fn identical_views_prefer_joining() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (data, mut proj) = random_problem(&mut rng, 1, &[3, 3], 2, 0.0);
    *proj.view_mut(1) = proj.view(0).clone();
    let z = nalgebra::DVector::from_vec(vec![0.8, -0.5]);
    let x = proj.view(0) * &z;
    let blocks = vec![
        nalgebra::DMatrix::from_row_slice(1, 3, x.as_slice()),
        nalgebra::DMatrix::from_row_slice(1, 3, x.as_slice()),
    ];
    let data = MultiViewDataset::from_dense(blocks).unwrap_or(data);
    let hyper = Hyperparameters::default().with_k(2);
    let mut sampler = GibbsSampler::new(&data, AssignmentState::single(1, 2), &proj, hyper).unwrap();
    let w = sampler.conditional_weights(0, 1).unwrap();
    let p = w.log_probs();
    assert!(p[0] > p[1], "{p:?}");
}
