mod common;

use common::*;
use mvad_core::experiment::{gen_synthetic_cca, CcaParams};
use mvad_core::inference::{run_stochastic_em_from, GibbsSampler};
use mvad_core::model::{compute_latent_stats, joint_log_likelihood};
use mvad_core::{
    anomaly_scores, reconstruction_scores, run_stochastic_em, AssignmentState, Error,
    Hyperparameters, InferenceConfig, MultiViewDataset,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick(n_sweeps: usize, burn_in: usize, seed: u64) -> InferenceConfig {
    InferenceConfig {
        n_sweeps,
        burn_in,
        seed,
        mstep_max_iters: 5,
        ..Default::default()
    }
}

fn cca(n: usize, rate: f64, seed: u64) -> MultiViewDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = CcaParams {
        n_instances: n,
        view_dims: vec![4, 4],
        k_star: 2,
        anomaly_rate: rate,
        noise_sd: 0.1,
    };
    gen_synthetic_cca(&params, &mut rng).unwrap().data
}

#[test]
fn trace_keeps_exactly_the_post_burn_in_sweeps() {
    let data = cca(20, 0.2, 1);
    let fit = run_stochastic_em(&data, &Hyperparameters::default().with_k(2), &quick(12, 4, 0)).unwrap();
    assert_eq!(fit.trace.retained(), 8);
    let sweeps: Vec<usize> = fit.trace.sweeps.iter().map(|s| s.sweep).collect();
    assert_eq!(sweeps, (4..12).collect::<Vec<_>>());
    for rec in &fit.trace.sweeps {
        assert_eq!(rec.latent_counts.len(), 20);
        assert!(rec.latent_counts.iter().all(|&j| (1..=2).contains(&j)));
        assert!(rec.joint_log_likelihood.is_finite());
        assert!(rec.assignments.is_none());
    }
    assert_eq!(fit.trace.last().unwrap().latent_counts, fit.state.latent_counts());
}

#[test]
fn recorded_likelihood_is_that_of_the_recorded_state() {
    let data = cca(15, 0.2, 2);
    let hyper = Hyperparameters::default().with_k(2);
    let config = InferenceConfig {
        record_states: true,
        mstep_every: 3,
        ..quick(9, 0, 5)
    };
    let fit = run_stochastic_em(&data, &hyper, &config).unwrap();
    let last = fit.trace.last().unwrap();
    let state = last.assignments.as_ref().unwrap();
    assert_eq!(state, &fit.state);
    let want = joint_log_likelihood(&data, state, &fit.projections, &hyper).unwrap();
    assert!((last.joint_log_likelihood - want).abs() <= 1e-9 * want.abs());
}

#[test]
fn fits_are_reproducible_from_the_seed() {
    let data = cca(20, 0.2, 3);
    let hyper = Hyperparameters::default().with_k(2);
    let a = run_stochastic_em(&data, &hyper, &quick(10, 2, 42)).unwrap();
    let b = run_stochastic_em(&data, &hyper, &quick(10, 2, 42)).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.projections, b.projections);
    let c = run_stochastic_em(&data, &hyper, &quick(10, 2, 43)).unwrap();
    assert_ne!(a.projections, c.projections);
}

#[test]
fn pinned_assignments_never_flag_anything() {
    let data = cca(20, 0.2, 4);
    let config = quick(8, 2, 0).pcca();
    let fit = run_stochastic_em(&data, &Hyperparameters::default().with_k(2), &config).unwrap();
    assert_eq!(fit.state, AssignmentState::single(20, 2));
    assert!(anomaly_scores(&fit.trace).unwrap().v.iter().all(|&v| v == 0.0));
    let recon = reconstruction_scores(&fit.trace).unwrap();
    assert!(recon.iter().all(|&e| e > 0.0 && e.is_finite()));
}

#[test]
fn single_view_instances_are_never_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = MultiViewDataset::from_dense(vec![DMatrix::from_fn(25, 4, |_, _| rng.random::<f64>())]).unwrap();
    let fit = run_stochastic_em(&data, &Hyperparameters::default().with_k(2), &quick(6, 1, 0)).unwrap();
    assert!(anomaly_scores(&fit.trace).unwrap().v.iter().all(|&v| v == 0.0));
}

#[test]
fn one_instance_fits_without_error() {
    let data = cca(1, 0.0, 7);
    let fit = run_stochastic_em(&data, &Hyperparameters::default().with_k(2), &quick(5, 1, 0)).unwrap();
    let v = anomaly_scores(&fit.trace).unwrap().v;
    assert_eq!(v.len(), 1);
    assert!((0.0..=1.0).contains(&v[0]));
}

#[test]
fn invalid_schedules_are_rejected() {
    let data = cca(4, 0.0, 8);
    let hyper = Hyperparameters::default().with_k(2);
    for config in [
        quick(5, 5, 0),
        InferenceConfig { mstep_every: 0, ..quick(5, 1, 0) },
        InferenceConfig { mstep_grad_tol: 0.0, ..quick(5, 1, 0) },
        InferenceConfig { init_scale: Some(-1.0), ..quick(5, 1, 0) },
    ] {
        assert!(matches!(run_stochastic_em(&data, &hyper, &config), Err(Error::InvalidConfig(_))));
    }
}

#[test]
fn swapped_views_are_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = CcaParams {
        n_instances: 60,
        view_dims: vec![6, 6],
        k_star: 2,
        anomaly_rate: 0.1,
        noise_sd: 0.05,
    };
    let s = gen_synthetic_cca(&params, &mut rng).unwrap();
    let config = InferenceConfig {
        n_sweeps: 60,
        burn_in: 20,
        ..Default::default()
    };
    let fit = run_stochastic_em(&s.data, &Hyperparameters::default().with_k(2), &config).unwrap();
    let v = anomaly_scores(&fit.trace).unwrap().v;
    let mean = |flag: bool| {
        let xs: Vec<f64> = v.iter().zip(&s.labels).filter(|(_, &l)| l == flag).map(|(&x, _)| x).collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    assert!(mean(true) > 0.8, "{}", mean(true));
    assert!(mean(false) < 0.1, "{}", mean(false));
}

#[test]
fn true_projections_are_recovered_up_to_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let params = CcaParams {
        n_instances: 200,
        view_dims: vec![5, 5],
        k_star: 2,
        anomaly_rate: 0.0,
        noise_sd: 0.05,
    };
    let s = gen_synthetic_cca(&params, &mut rng).unwrap();
    let hyper = Hyperparameters::default().with_k(2);
    let config = InferenceConfig {
        n_sweeps: 30,
        burn_in: 10,
        ..Default::default()
    }
    .pcca();
    let fit = run_stochastic_em_from(
        &s.data,
        &hyper,
        &config,
        mvad_core::ProjectionSet::random(&[5, 5], 2, 0.5, &mut rng),
        AssignmentState::single(200, 2),
    )
    .unwrap();
    let stack = |p: &mvad_core::ProjectionSet| {
        let mut m = DMatrix::zeros(10, 2);
        m.view_mut((0, 0), (5, 2)).copy_from(p.view(0));
        m.view_mut((5, 0), (5, 2)).copy_from(p.view(1));
        m
    };
    let truth = stack(&s.projections);
    let got = stack(&fit.projections);
    // distance between column spaces via orthogonal projectors
    let projector = |m: &DMatrix<f64>| {
        let q = m.clone().qr().q();
        &q * q.transpose()
    };
    let gap = (projector(&truth) - projector(&got)).norm();
    assert!(gap < 0.05, "{gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sweeps_preserve_state_invariants_and_stats(seed in 0u64..10_000, p in 0.0f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..5);
        let d = rng.random_range(1..5);
        let dims: Vec<usize> = (0..d).map(|_| rng.random_range(1..4)).collect();
        let (data, proj) = random_problem(&mut rng, n, &dims, 2, p);
        let hyper = random_hyper(&mut rng, 2);
        let start = random_state(&mut rng, n, d);
        let mut sampler = GibbsSampler::new(&data, start, &proj, hyper).unwrap();
        for _ in 0..3 {
            sampler.sweep(&mut rng, seed % 2 == 0).unwrap();
            let state = sampler.state();
            prop_assert!(state.validate().is_ok());
            prop_assert_eq!(
                AssignmentState::from_labels(state.all_assignments().to_vec()).unwrap().latent_counts(),
                state.latent_counts()
            );
            let fresh = compute_latent_stats(&data, state, &proj, &hyper).unwrap();
            let inc = sampler.stats().log_marginal();
            prop_assert!((inc - fresh.log_marginal()).abs() <= 1e-9 * fresh.log_marginal().abs().max(1.0));
        }
    }

    #[test]
    fn scores_lie_in_the_unit_interval(seed in 0u64..1_000) {
        let data = cca(10, 0.2, seed);
        let fit = run_stochastic_em(&data, &Hyperparameters::default().with_k(2), &quick(6, 2, seed)).unwrap();
        let v = anomaly_scores(&fit.trace).unwrap().v;
        prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        let h = fit.trace.retained() as f64;
        prop_assert!(v.iter().all(|x| (x * h - (x * h).round()).abs() < 1e-12));
    }
}
