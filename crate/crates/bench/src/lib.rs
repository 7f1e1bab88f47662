//! Fixtures shared by the criterion benchmarks.

use mvad_core::experiment::{gen_synthetic_cca, CcaParams};
use mvad_core::{AssignmentState, Hyperparameters, MultiViewDataset, ProjectionSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub data: MultiViewDataset,
    pub hyper: Hyperparameters,
    pub projections: ProjectionSet,
    pub state: AssignmentState,
}

/// Synthetic two-view data of `n` instances with `m` features per view and
/// latent dimensionality `k`, paired with its generating projections.
pub fn fixture(n: usize, m: usize, k: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = CcaParams {
        n_instances: n,
        view_dims: vec![m, m],
        k_star: k,
        anomaly_rate: 0.1,
        noise_sd: 0.1,
    };
    let s = gen_synthetic_cca(&params, &mut rng).expect("valid synthetic parameters");
    let state = AssignmentState::single(n, 2);
    Fixture {
        data: s.data,
        hyper: Hyperparameters::default().with_k(k),
        projections: s.projections,
        state,
    }
}
