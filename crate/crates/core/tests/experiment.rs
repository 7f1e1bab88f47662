use mvad_core::experiment::{
    auc, gen_single_view_anomalies, gen_synthetic_cca, inject_swap_anomalies, parse_libsvm_str, split_views,
    swap_anomaly_count, CcaParams, SingleViewParams,
};
use mvad_core::MultiViewDataset;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pairwise definition: fraction of (anomaly, normal) pairs ordered
/// correctly, ties counting one half.
fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0.0;
    for (s, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        for (t, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
            pairs += 1.0;
            total += if s > t { 1.0 } else if s == t { 0.5 } else { 0.0 };
        }
    }
    total / pairs
}

fn sorted_rows(data: &MultiViewDataset, d: usize) -> Vec<Vec<u64>> {
    let v = data.view(d).values();
    let mut rows: Vec<Vec<u64>> = (0..v.nrows())
        .map(|i| v.row(i).iter().map(|x| x.to_bits()).collect())
        .collect();
    rows.sort();
    rows
}

#[test]
fn auc_edge_cases() {
    assert_eq!(auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
    assert_eq!(auc(&[0.1, 0.9], &[true, false]).unwrap(), 0.0);
    assert_eq!(auc(&[0.5, 0.5, 0.5], &[true, false, false]).unwrap(), 0.5);
    assert!(auc(&[0.1, 0.2], &[false, false]).is_err());
    assert!(auc(&[0.1], &[true, false]).is_err());
    assert!(auc(&[f64::NAN, 0.2], &[true, false]).is_err());
}

#[test]
fn libsvm_round_trip_to_dense() {
    let text = "1 1:0.5 3:2\n# comment\n-1 2:1.5\n\n+1 3:-1 # trailing\n";
    let ds = parse_libsvm_str(text).unwrap();
    assert_eq!(ds.labels, vec![1.0, -1.0, 1.0]);
    assert_eq!(ds.dim, 3);
    let dense = ds.to_dense();
    assert_eq!(dense, DMatrix::from_row_slice(3, 3, &[0.5, 0.0, 2.0, 0.0, 1.5, 0.0, 0.0, 0.0, -1.0]));
}

#[test]
fn libsvm_errors_name_the_line() {
    for (text, line) in [("1 1:2\n1 0:3\n", 2), ("x 1:2\n", 1), ("1 2:1 1:1\n", 1), ("1\n1 3\n", 2), ("1 1:nan\n", 1)] {
        match parse_libsvm_str(text) {
            Err(mvad_core::Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn split_drops_constant_columns_and_standardizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut x = DMatrix::from_fn(50, 7, |_, _| rng.random::<f64>() * 4.0 + 1.0);
    x.column_mut(3).fill(2.0);
    let split = split_views(&x, 3, &mut rng).unwrap();
    assert_eq!(split.dropped, vec![3]);
    let mut all: Vec<usize> = split.groups.concat();
    all.sort();
    assert_eq!(all, vec![0, 1, 2, 4, 5, 6]);
    let sizes: Vec<usize> = split.groups.iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![2, 2, 2]);
    for view in split.data.views() {
        for c in 0..view.dim() {
            let col = view.values().column(c);
            let mean = col.mean();
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        }
    }
    assert!(split_views(&x, 7, &mut rng).is_err());
}

#[test]
fn swap_counts_must_be_even_and_whole() {
    assert_eq!(swap_anomaly_count(100, 0.2).unwrap(), 20);
    assert_eq!(swap_anomaly_count(100, 0.0).unwrap(), 0);
    assert!(swap_anomaly_count(100, 0.05).is_err());
    assert!(swap_anomaly_count(10, 0.15).is_err());
    assert!(swap_anomaly_count(10, 1.0).is_err());
}

#[test]
fn generators_label_the_requested_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = gen_synthetic_cca(&CcaParams::default(), &mut rng).unwrap();
    assert_eq!(s.labels.iter().filter(|&&l| l).count(), 20);
    for (i, &l) in s.labels.iter().enumerate() {
        let distinct = s.latents[i][0] != s.latents[i][1];
        assert_eq!(distinct, l);
    }
    let t = gen_single_view_anomalies(&SingleViewParams::default(), &mut rng).unwrap();
    assert_eq!(t.labels.iter().filter(|&&l| l).count(), 5);
    assert_eq!(t.data.view_dims(), vec![5, 5]);
    assert!(t.latents.iter().all(|zs| zs.iter().all(|z| z == &zs[0])));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_auc_equals_pairwise_definition(
        pairs in proptest::collection::vec((0u8..6, any::<bool>()), 2..40)
    ) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        prop_assert!((auc(&scores, &labels).unwrap() - pairwise_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn swaps_preserve_each_views_rows(seed in 0u64..10_000, half in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 12;
        let blocks = (0..3).map(|d| DMatrix::from_fn(n, d + 1, |_, _| rng.random::<f64>())).collect();
        let data = MultiViewDataset::from_dense(blocks).unwrap();
        let rate = (2 * half) as f64 / n as f64;
        let (swapped, labels) = inject_swap_anomalies(&data, rate, &mut rng).unwrap();
        prop_assert_eq!(labels.iter().filter(|&&l| l).count(), 2 * half);
        prop_assert_eq!(swapped.labels(), Some(&labels[..]));
        for d in 0..3 {
            prop_assert_eq!(sorted_rows(&data, d), sorted_rows(&swapped, d));
        }
        for (i, &l) in labels.iter().enumerate() {
            let changed = (0..3).any(|d| data.view(d).values().row(i) != swapped.view(d).values().row(i));
            if !l {
                prop_assert!(!changed);
            }
        }
    }
}
