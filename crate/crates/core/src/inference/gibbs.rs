//! Collapsed Gibbs sampling of view-to-latent-vector assignments.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{
    check_state, ln_2pi, partition_log_prior, AssignmentState, GroupStats, Hyperparameters,
    LatentStats, MultiViewDataset, ProjectionSet, ViewTerms,
};

/// Unnormalized log-probabilities of every candidate latent vector for one
/// detached view. Candidates `0..J` are the instance's existing latent
/// vectors (labels as they stand once the view is removed); candidate `J`
/// opens a new one.
#[derive(Debug, Clone)]
pub struct ConditionalWeights {
    /// Log of the partition-prior ratio.
    pub log_prior: Vec<f64>,
    /// Log of the marginal-likelihood ratio.
    pub log_likelihood: Vec<f64>,
}

impl ConditionalWeights {
    pub fn len(&self) -> usize {
        self.log_prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_prior.is_empty()
    }

    pub fn unnormalized(&self) -> Vec<f64> {
        self.log_prior
            .iter()
            .zip(&self.log_likelihood)
            .map(|(p, l)| p + l)
            .collect()
    }

    /// Normalized log-probabilities.
    pub fn log_probs(&self) -> Vec<f64> {
        let w = self.unnormalized();
        let lse = log_sum_exp(&w);
        w.into_iter().map(|v| v - lse).collect()
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

struct Candidate {
    log_prior: f64,
    log_likelihood: f64,
    group: GroupStats,
}

/// Sampler state: assignments plus incrementally maintained statistics.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a> {
    data: &'a MultiViewDataset,
    hyper: Hyperparameters,
    terms: ViewTerms,
    state: AssignmentState,
    stats: LatentStats,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(
        data: &'a MultiViewDataset,
        state: AssignmentState,
        proj: &ProjectionSet,
        hyper: Hyperparameters,
    ) -> Result<Self> {
        hyper.validate()?;
        check_state(data, &state)?;
        if proj.k() != hyper.k {
            return Err(Error::InvalidProjection(format!(
                "projection has {} latent columns, hyperparameters say k = {}",
                proj.k(),
                hyper.k
            )));
        }
        let terms = ViewTerms::new(data, proj)?;
        let stats = LatentStats::build(&terms, &state, &hyper)?;
        Ok(Self {
            data,
            hyper,
            terms,
            state,
            stats,
        })
    }

    pub fn state(&self) -> &AssignmentState {
        &self.state
    }

    pub fn stats(&self) -> &LatentStats {
        &self.stats
    }

    pub fn into_state(self) -> AssignmentState {
        self.state
    }

    /// Swaps in new projection matrices and recomputes all statistics.
    pub fn set_projection(&mut self, proj: &ProjectionSet) -> Result<()> {
        self.terms = ViewTerms::new(self.data, proj)?;
        self.refresh()
    }

    /// Recomputes statistics from scratch for the current state.
    pub fn refresh(&mut self) -> Result<()> {
        self.stats = LatentStats::build(&self.terms, &self.state, &self.hyper)?;
        Ok(())
    }

    pub fn joint_log_likelihood(&self) -> f64 {
        partition_log_prior(&self.state, self.hyper.gamma).expect("validated gamma")
            + self.stats.log_marginal()
    }

    fn detach(&mut self, n: usize, d: usize) -> Result<()> {
        let (j, emptied) = self.state.detach(n, d);
        self.stats.take_view(&self.terms, n, d);
        if emptied {
            self.stats.remove_group(n, j);
        } else {
            let g = GroupStats::from_members(&self.terms, self.hyper.r, n, self.state.members(n, j))
                .ok_or(Error::NotPositiveDefinite { n, j })?;
            self.stats.replace_group(n, j, g);
        }
        Ok(())
    }

    fn attach(&mut self, n: usize, d: usize, j: usize, group: GroupStats) {
        let opening = j == self.state.n_latent(n);
        self.state.attach(n, d, j);
        self.stats.give_view(&self.terms, n, d);
        if opening {
            self.stats.push_group(n, group);
        } else {
            self.stats.replace_group(n, j, group);
        }
    }

    fn candidates(&self, n: usize, d: usize) -> Result<Vec<Candidate>> {
        let k = self.terms.k();
        let r = self.hyper.r;
        let gamma = self.hyper.gamma;
        let n_views = self.state.n_views() as f64;
        let gram = self.terms.gram(n, d);
        let h = self.terms.projected(n, d);
        let sq = self.terms.sq_norm(n, d);
        let m = self.terms.n_observed(n, d) as f64;

        let a_without = self.stats.a_prime();
        let b_without = self.stats.b_prime();
        let a_with = a_without + 0.5 * m;
        let base = -0.5 * m * ln_2pi() + a_without * b_without.ln() + ln_gamma(a_with)
            - ln_gamma(a_without);
        let log_denom = (n_views - 1.0 + gamma).ln();

        let existing = self.stats.groups(n);
        let mut out = Vec::with_capacity(existing.len() + 1);
        for (j, current) in existing.iter().enumerate() {
            let group = GroupStats::from_parts(current.precision() + gram, current.proj_sum() + h)
                .ok_or(Error::NotPositiveDefinite { n, j })?;
            let b_with = b_without + 0.5 * (sq + current.quad() - group.quad());
            let log_likelihood = base - a_with * b_with.ln()
                - 0.5 * (group.log_det_precision() - current.log_det_precision());
            out.push(Candidate {
                log_prior: (self.state.counts(n)[j] as f64).ln() - log_denom,
                log_likelihood,
                group,
            });
        }
        let j_new = existing.len();
        let group = GroupStats::from_parts(DMatrix::identity(k, k) * r + gram, h.clone())
            .ok_or(Error::NotPositiveDefinite { n, j: j_new })?;
        let b_with = b_without + 0.5 * (sq - group.quad());
        let log_likelihood =
            base - a_with * b_with.ln() + 0.5 * k as f64 * r.ln() - 0.5 * group.log_det_precision();
        out.push(Candidate {
            log_prior: gamma.ln() - log_denom,
            log_likelihood,
            group,
        });
        Ok(out)
    }

    /// Conditional weights for view `d` of instance `n`, leaving the sampler
    /// unchanged.
    pub fn conditional_weights(&mut self, n: usize, d: usize) -> Result<ConditionalWeights> {
        let saved_state = self.state.clone();
        let saved_stats = self.stats.clone();
        self.detach(n, d)?;
        let result = self.candidates(n, d);
        self.state = saved_state;
        self.stats = saved_stats;
        let cands = result?;
        Ok(ConditionalWeights {
            log_prior: cands.iter().map(|c| c.log_prior).collect(),
            log_likelihood: cands.iter().map(|c| c.log_likelihood).collect(),
        })
    }

    /// Removes view `d` of instance `n` from its latent vector and draws a
    /// new assignment from its collapsed conditional.
    pub fn resample_assignment<R: Rng + ?Sized>(&mut self, n: usize, d: usize, rng: &mut R) -> Result<()> {
        self.detach(n, d)?;
        let cands = match self.candidates(n, d) {
            Ok(c) => c,
            Err(e) => {
                // Restore a consistent state before bailing out.
                self.state.attach(n, d, self.state.n_latent(n));
                self.refresh()?;
                return Err(e);
            }
        };
        let weights: Vec<f64> = cands.iter().map(|c| c.log_prior + c.log_likelihood).collect();
        let choice = sample_log_weights(&weights, rng);
        let group = cands.into_iter().nth(choice).expect("choice in range").group;
        self.attach(n, d, choice, group);
        Ok(())
    }

    /// One full pass over every view of every instance, n-major and d-minor,
    /// or in a random order when `random_scan` is set.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, random_scan: bool) -> Result<()> {
        let n_inst = self.state.n_instances();
        let n_views = self.state.n_views();
        if random_scan {
            let mut order: Vec<(usize, usize)> = (0..n_inst)
                .flat_map(|n| (0..n_views).map(move |d| (n, d)))
                .collect();
            order.shuffle(rng);
            for (n, d) in order {
                self.resample_assignment(n, d, rng)?;
            }
        } else {
            for n in 0..n_inst {
                for d in 0..n_views {
                    self.resample_assignment(n, d, rng)?;
                }
            }
        }
        Ok(())
    }
}

fn sample_log_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let probs: Vec<f64> = weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    probs.len() - 1
}

/// Runs one Gibbs sweep over a fresh sampler and returns the new state.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    data: &MultiViewDataset,
    state: AssignmentState,
    proj: &ProjectionSet,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<(AssignmentState, LatentStats)> {
    let mut sampler = GibbsSampler::new(data, state, proj, *hyper)?;
    sampler.sweep(rng, false)?;
    let stats = sampler.stats.clone();
    Ok((sampler.into_state(), stats))
}
