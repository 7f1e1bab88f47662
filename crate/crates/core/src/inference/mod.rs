//! Stochastic EM: collapsed Gibbs E-steps, quasi-Newton M-steps and
//! anomaly scoring.

mod em;
mod gibbs;
pub mod lbfgs;
mod mstep;
mod scores;

pub use em::{
    reconstruction_errors, run_stochastic_em, run_stochastic_em_from, FitResult, GibbsTrace,
    InferenceConfig, SweepRecord,
};
pub use gibbs::{gibbs_sweep, ConditionalWeights, GibbsSampler};
pub use mstep::{joint_gradient, mstep_gradient, mstep_optimize, MStepOutcome};
pub use scores::{anomaly_scores, reconstruction_scores, AnomalyScores};
