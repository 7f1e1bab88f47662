use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::libsvm::{parse_libsvm, SparseDataset};
use super::metrics::{auc, summarize, Summary};
use super::synthetic::{gen_single_view_anomalies, gen_synthetic_cca, CcaParams, SingleViewParams};
use super::views::{inject_swap_anomalies, split_views};
use crate::error::{Error, Result};
use crate::inference::{anomaly_scores, reconstruction_scores, run_stochastic_em, InferenceConfig};
use crate::missing::{holdout_cells, impute_from_trace, mean_imputation};
use crate::model::{Hyperparameters, MultiViewDataset};

/// Where the data of an experiment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Features split at random into views; anomalies injected by swapping.
    Libsvm { path: PathBuf },
    /// Linear-Gaussian multi-view data with generated multi-view anomalies.
    SyntheticCca {
        n_instances: usize,
        view_dim: usize,
        k_star: usize,
        noise_sd: f64,
    },
    /// Consistent instances with inflated-scale outliers.
    SingleViewAnomalies(SingleViewParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub n_views: usize,
    pub anomaly_rate: f64,
    pub hyper: Hyperparameters,
    /// Per-seed runs override `config.seed` with the seed itself.
    pub config: InferenceConfig,
    pub seeds: Vec<u64>,
    /// Share of observed cells hidden and imputed, if any.
    pub missing_frac: Option<f64>,
    /// Also fit the single-latent-vector (PCCA) baseline.
    pub pcca_baseline: bool,
    /// Record wall-clock runtimes. Off by default so reports are reproducible
    /// byte for byte.
    pub record_timings: bool,
}

impl ExperimentSpec {
    pub fn new(source: DataSource, n_views: usize, anomaly_rate: f64, seeds: Vec<u64>) -> Self {
        Self {
            source,
            n_views,
            anomaly_rate,
            hyper: Hyperparameters::default(),
            config: InferenceConfig::default(),
            seeds,
            missing_frac: None,
            pcca_baseline: true,
            record_timings: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub auc: Option<f64>,
    pub auc_pcca: Option<f64>,
    pub mse: Option<f64>,
    pub mse_pcca: Option<f64>,
    pub mse_mean: Option<f64>,
    pub log_likelihood: Option<f64>,
    pub runtime_s: Option<f64>,
    pub runtime_pcca_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub auc: Option<Summary>,
    pub auc_pcca: Option<Summary>,
    pub mse: Option<Summary>,
    pub mse_pcca: Option<Summary>,
    pub mse_mean: Option<Summary>,
    pub log_likelihood: Option<Summary>,
    pub runtime_s: Option<Summary>,
    pub runtime_pcca_s: Option<Summary>,
    pub failed_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub spec: ExperimentSpec,
    pub seeds: Vec<SeedMetrics>,
    pub aggregate: AggregateMetrics,
}

impl MetricsReport {
    pub fn all_failed(&self) -> bool {
        !self.seeds.is_empty() && self.seeds.iter().all(|s| s.error.is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per seed followed by one aggregate row (means, with standard
    /// errors in the `_se` columns).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "row", "seed", "auc", "auc_se", "auc_pcca", "auc_pcca_se", "mse", "mse_se", "mse_pcca",
            "mse_pcca_se", "mse_mean", "mse_mean_se", "log_likelihood", "log_likelihood_se",
            "runtime_s", "runtime_pcca_s", "error",
        ])
        .map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.seeds {
            w.write_record([
                "seed".to_string(),
                s.seed.to_string(),
                opt(s.auc),
                String::new(),
                opt(s.auc_pcca),
                String::new(),
                opt(s.mse),
                String::new(),
                opt(s.mse_pcca),
                String::new(),
                opt(s.mse_mean),
                String::new(),
                opt(s.log_likelihood),
                String::new(),
                opt(s.runtime_s),
                opt(s.runtime_pcca_s),
                s.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        let a = &self.aggregate;
        let mean = |s: &Option<Summary>| opt(s.map(|s| s.mean));
        let se = |s: &Option<Summary>| opt(s.map(|s| s.std_error));
        w.write_record([
            "aggregate".to_string(),
            String::new(),
            mean(&a.auc),
            se(&a.auc),
            mean(&a.auc_pcca),
            se(&a.auc_pcca),
            mean(&a.mse),
            se(&a.mse),
            mean(&a.mse_pcca),
            se(&a.mse_pcca),
            mean(&a.mse_mean),
            se(&a.mse_mean),
            mean(&a.log_likelihood),
            se(&a.log_likelihood),
            mean(&a.runtime_s),
            mean(&a.runtime_pcca_s),
            if a.failed_seeds > 0 {
                format!("{} seed(s) failed", a.failed_seeds)
            } else {
                String::new()
            },
        ])
        .map_err(csv_err)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Experiment(format!("csv: {e}"))
}

/// Builds the dataset (with labels) that a seed evaluates.
pub fn build_dataset(spec: &ExperimentSpec, libsvm: Option<&SparseDataset>, rng: &mut ChaCha8Rng) -> Result<MultiViewDataset> {
    match &spec.source {
        DataSource::Libsvm { .. } => {
            let sparse = libsvm.ok_or_else(|| Error::Experiment("LIBSVM data not loaded".into()))?;
            let split = split_views(&sparse.to_dense(), spec.n_views, rng)?;
            let (data, _) = inject_swap_anomalies(&split.data, spec.anomaly_rate, rng)?;
            Ok(data)
        }
        DataSource::SyntheticCca {
            n_instances,
            view_dim,
            k_star,
            noise_sd,
        } => {
            let params = CcaParams {
                n_instances: *n_instances,
                view_dims: vec![*view_dim; spec.n_views],
                k_star: *k_star,
                anomaly_rate: spec.anomaly_rate,
                noise_sd: *noise_sd,
            };
            Ok(gen_synthetic_cca(&params, rng)?.data)
        }
        DataSource::SingleViewAnomalies(params) => Ok(gen_single_view_anomalies(params, rng)?.data),
    }
}

fn run_seed(spec: &ExperimentSpec, libsvm: Option<&SparseDataset>, seed: u64) -> SeedMetrics {
    let mut out = SeedMetrics {
        seed,
        ..Default::default()
    };
    if let Err(e) = fill_seed(spec, libsvm, seed, &mut out) {
        out.error = Some(e.to_string());
    }
    out
}

fn fill_seed(spec: &ExperimentSpec, libsvm: Option<&SparseDataset>, seed: u64, out: &mut SeedMetrics) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = build_dataset(spec, libsvm, &mut rng)?;
    let labels = data.labels().map(<[bool]>::to_vec).unwrap_or_default();
    let holdout = spec
        .missing_frac
        .map(|f| holdout_cells(&data, f, &mut rng))
        .transpose()?;
    let fit_data = holdout.as_ref().map_or(&data, |h| &h.masked);
    let config = InferenceConfig {
        seed,
        record_states: holdout.is_some(),
        ..spec.config.clone()
    };

    let started = Instant::now();
    let fit = run_stochastic_em(fit_data, &spec.hyper, &config)?;
    if spec.record_timings {
        out.runtime_s = Some(started.elapsed().as_secs_f64());
    }
    out.log_likelihood = fit.final_log_likelihood();
    out.auc = auc(&anomaly_scores(&fit.trace)?.v, &labels).ok();
    if let Some(h) = &holdout {
        out.mse = Some(h.mse(&impute_from_trace(fit_data, &fit.projections, &fit.trace, &spec.hyper)?));
        out.mse_mean = Some(h.mse(&mean_imputation(fit_data)));
    }

    if spec.pcca_baseline {
        let started = Instant::now();
        let pcca = run_stochastic_em(fit_data, &spec.hyper, &config.pcca())?;
        if spec.record_timings {
            out.runtime_pcca_s = Some(started.elapsed().as_secs_f64());
        }
        out.auc_pcca = auc(&reconstruction_scores(&pcca.trace)?, &labels).ok();
        if let Some(h) = &holdout {
            out.mse_pcca = Some(h.mse(&impute_from_trace(fit_data, &pcca.projections, &pcca.trace, &spec.hyper)?));
        }
    }
    Ok(())
}

fn aggregate(seeds: &[SeedMetrics]) -> AggregateMetrics {
    let ok: Vec<&SeedMetrics> = seeds.iter().filter(|s| s.error.is_none()).collect();
    let col = |f: fn(&SeedMetrics) -> Option<f64>| summarize(&ok.iter().filter_map(|s| f(s)).collect::<Vec<_>>());
    AggregateMetrics {
        auc: col(|s| s.auc),
        auc_pcca: col(|s| s.auc_pcca),
        mse: col(|s| s.mse),
        mse_pcca: col(|s| s.mse_pcca),
        mse_mean: col(|s| s.mse_mean),
        log_likelihood: col(|s| s.log_likelihood),
        runtime_s: col(|s| s.runtime_s),
        runtime_pcca_s: col(|s| s.runtime_pcca_s),
        failed_seeds: seeds.len() - ok.len(),
    }
}

/// Runs every seed of an experiment, up to `jobs` seeds at a time, and
/// aggregates in seed-list order. Seed failures are recorded in the report
/// rather than aborting the run.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<MetricsReport> {
    spec.hyper.validate()?;
    spec.config.validate()?;
    if spec.seeds.is_empty() {
        return Err(Error::InvalidConfig("experiment needs at least one seed".into()));
    }
    let libsvm = match &spec.source {
        DataSource::Libsvm { path } => Some(load_libsvm(path)?),
        _ => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Experiment(format!("thread pool: {e}")))?;
    let seeds: Vec<SeedMetrics> = pool.install(|| {
        spec.seeds
            .par_iter()
            .map(|&seed| run_seed(spec, libsvm.as_ref(), seed))
            .collect()
    });
    let aggregate = aggregate(&seeds);
    Ok(MetricsReport {
        spec: spec.clone(),
        seeds,
        aggregate,
    })
}

fn load_libsvm(path: &Path) -> Result<SparseDataset> {
    parse_libsvm(path)
}
