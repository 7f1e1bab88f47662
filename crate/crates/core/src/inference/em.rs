use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gibbs::GibbsSampler;
use super::lbfgs::LbfgsOptions;
use super::mstep::mstep_optimize;
use crate::error::{Error, Result};
use crate::model::{AssignmentState, Hyperparameters, LatentStats, MultiViewDataset, ProjectionSet};

/// Settings of the stochastic EM run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    /// Total Gibbs sweeps.
    pub n_sweeps: usize,
    /// Sweeps discarded before anything is recorded.
    pub burn_in: usize,
    /// Gibbs sweeps per M-step.
    pub mstep_every: usize,
    pub mstep_max_iters: usize,
    pub mstep_grad_tol: f64,
    pub seed: u64,
    /// Standard deviation of the initial projection entries; `None` means
    /// `1/sqrt(k)`.
    pub init_scale: Option<f64>,
    /// Fit the projections to the starting assignments before the first
    /// Gibbs sweep.
    pub warm_start: bool,
    /// When false the assignments stay pinned to one latent vector per
    /// instance, which is probabilistic CCA with spherical noise.
    pub resample: bool,
    pub random_scan: bool,
    /// Keep the full assignment state of every retained sweep.
    pub record_states: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            n_sweeps: 500,
            burn_in: 100,
            mstep_every: 1,
            mstep_max_iters: 20,
            mstep_grad_tol: 1e-6,
            seed: 0,
            init_scale: None,
            warm_start: true,
            resample: true,
            random_scan: false,
            record_states: false,
        }
    }
}

impl InferenceConfig {
    /// Same schedule with assignments pinned (PCCA mode).
    pub fn pcca(&self) -> Self {
        Self {
            resample: false,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_sweeps {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be smaller than n_sweeps ({})",
                self.burn_in, self.n_sweeps
            )));
        }
        if self.mstep_every == 0 {
            return Err(Error::InvalidConfig("mstep_every must be at least 1".into()));
        }
        if !(self.mstep_grad_tol > 0.0) {
            return Err(Error::InvalidConfig("mstep_grad_tol must be positive".into()));
        }
        if let Some(s) = self.init_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidConfig("init_scale must be positive".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn lbfgs(&self) -> LbfgsOptions {
        LbfgsOptions {
            max_iters: self.mstep_max_iters,
            grad_tol: self.mstep_grad_tol,
            ..Default::default()
        }
    }
}

/// What is kept from one retained sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    /// `J_n` for every instance.
    pub latent_counts: Vec<usize>,
    pub joint_log_likelihood: f64,
    /// Squared reconstruction error `Σ_d ‖x_nd − W_d μ_{n,s_nd}‖²` over
    /// observed cells, per instance.
    pub reconstruction_error: Vec<f64>,
    pub assignments: Option<AssignmentState>,
}

/// Record of the retained (post burn-in) sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsTrace {
    pub n_instances: usize,
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub sweeps: Vec<SweepRecord>,
}

impl GibbsTrace {
    /// Number of retained sweeps `H`.
    pub fn retained(&self) -> usize {
        self.sweeps.len()
    }

    pub fn last(&self) -> Option<&SweepRecord> {
        self.sweeps.last()
    }

    /// Assignment states of retained sweeps, if they were recorded.
    pub fn states(&self) -> Option<Vec<&AssignmentState>> {
        self.sweeps.iter().map(|s| s.assignments.as_ref()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub projections: ProjectionSet,
    pub trace: GibbsTrace,
    pub state: AssignmentState,
}

impl FitResult {
    pub fn final_log_likelihood(&self) -> Option<f64> {
        self.trace.last().map(|s| s.joint_log_likelihood)
    }
}

/// Fits the model by stochastic EM from the default initialization: random
/// Gaussian projections and a single latent vector per instance.
pub fn run_stochastic_em(
    data: &MultiViewDataset,
    hyper: &Hyperparameters,
    config: &InferenceConfig,
) -> Result<FitResult> {
    config.validate()?;
    hyper.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scale = config.init_scale.unwrap_or(1.0 / (hyper.k as f64).sqrt());
    let proj = ProjectionSet::random(&data.view_dims(), hyper.k, scale, &mut rng);
    let state = AssignmentState::single(data.n_instances(), data.n_views());
    run_from(data, hyper, config, proj, state, &mut rng)
}

/// Fits from a given starting point. With `config.resample == false` the
/// starting assignments are kept throughout.
pub fn run_stochastic_em_from(
    data: &MultiViewDataset,
    hyper: &Hyperparameters,
    config: &InferenceConfig,
    proj: ProjectionSet,
    state: AssignmentState,
) -> Result<FitResult> {
    config.validate()?;
    hyper.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_from(data, hyper, config, proj, state, &mut rng)
}

fn run_from(
    data: &MultiViewDataset,
    hyper: &Hyperparameters,
    config: &InferenceConfig,
    mut proj: ProjectionSet,
    state: AssignmentState,
    rng: &mut ChaCha8Rng,
) -> Result<FitResult> {
    let mut sampler = GibbsSampler::new(data, state, &proj, *hyper)?;
    let opts = config.lbfgs();
    let mut sweeps = Vec::with_capacity(config.n_sweeps - config.burn_in);
    if config.warm_start {
        proj = mstep_optimize(data, sampler.state(), hyper, &proj, &opts)?.projections;
        sampler.set_projection(&proj)?;
    }

    for sweep in 0..config.n_sweeps {
        if config.resample {
            sampler.sweep(rng, config.random_scan)?;
        }
        if (sweep + 1) % config.mstep_every == 0 {
            let out = mstep_optimize(data, sampler.state(), hyper, &proj, &opts)?;
            proj = out.projections;
            sampler.set_projection(&proj)?;
        } else {
            sampler.refresh()?;
        }
        if sweep >= config.burn_in {
            sweeps.push(SweepRecord {
                sweep,
                latent_counts: sampler.state().latent_counts(),
                joint_log_likelihood: sampler.joint_log_likelihood(),
                reconstruction_error: reconstruction_errors(data, sampler.state(), sampler.stats(), &proj),
                assignments: config.record_states.then(|| sampler.state().clone()),
            });
        }
    }

    Ok(FitResult {
        projections: proj,
        trace: GibbsTrace {
            n_instances: data.n_instances(),
            n_sweeps: config.n_sweeps,
            burn_in: config.burn_in,
            sweeps,
        },
        state: sampler.into_state(),
    })
}

/// Per-instance squared reconstruction error over observed cells, using the
/// posterior mean of each view's latent vector.
pub fn reconstruction_errors(
    data: &MultiViewDataset,
    state: &AssignmentState,
    stats: &LatentStats,
    proj: &ProjectionSet,
) -> Vec<f64> {
    (0..data.n_instances())
        .map(|n| {
            let mut err = 0.0;
            for d in 0..data.n_views() {
                let view = data.view(d);
                let mu = stats.groups(n)[state.assignment(n, d)].mean();
                let recon = proj.view(d) * mu;
                for m in 0..view.dim() {
                    if view.is_observed(n, m) {
                        let e = view.value(n, m) - recon[m];
                        err += e * e;
                    }
                }
            }
            err
        })
        .collect()
}
