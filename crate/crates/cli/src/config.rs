use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mvad_core::{Hyperparameters, InferenceConfig};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Linear-Gaussian multi-view data with generated anomalies.
    Cca,
    /// Consistent instances with inflated-scale outliers.
    SingleView,
    /// A LIBSVM file split into views, with swap anomalies.
    Libsvm,
}

/// Options shared by every command. Each may also be set in the file given
/// by `--config` under the same (kebab-case) name; flags take precedence.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Dataset file: `.json` dataset or LIBSVM text.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Number of views to split LIBSVM features into (or to generate).
    #[arg(long, global = true)]
    pub views: Option<usize>,
    /// Latent dimensionality.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Total Gibbs sweeps.
    #[arg(long, global = true)]
    pub sweeps: Option<usize>,
    #[arg(long, global = true)]
    pub burn_in: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub anomaly_rate: Option<f64>,
    /// Share of observed cells hidden for imputation scoring.
    #[arg(long, global = true)]
    pub missing_frac: Option<f64>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Seeds run in parallel by `benchmark`.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Trace file written by `fit`.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
    /// Data source for `generate` and `benchmark`.
    #[arg(long, global = true, value_enum)]
    pub source: Option<Source>,
    #[arg(long, global = true)]
    pub n_instances: Option<usize>,
    /// Features per generated view.
    #[arg(long, global = true)]
    pub view_dim: Option<usize>,
    /// Latent dimensionality of generated data.
    #[arg(long, global = true)]
    pub k_star: Option<usize>,
    #[arg(long, global = true)]
    pub noise_sd: Option<f64>,
    /// Number of benchmark seeds, starting at `--seed`.
    #[arg(long, global = true)]
    pub n_seeds: Option<usize>,
    /// Candidate latent dimensionalities, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(default)]
    pub k_grid: Option<Vec<usize>>,
    /// Record wall-clock runtimes in benchmark reports.
    #[arg(long, global = true)]
    #[serde(default)]
    pub timings: Option<bool>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),+ $(,)?) => {
        Settings { $($field: $flags.$field.or($file.$field),)+ }
    };
}

impl Settings {
    /// Field-wise `self` over `file`.
    pub fn over(self, file: Settings) -> Settings {
        overlay!(
            self, file, input, views, k, gamma, a, b, r, sweeps, burn_in, seed, anomaly_rate,
            missing_frac, output_dir, format, jobs, trace, source, n_instances, view_dim, k_star,
            noise_sd, n_seeds, k_grid, timings,
        )
    }

    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub settings: Settings,
    pub hyper: Hyperparameters,
    pub inference: InferenceConfig,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    pub jobs: usize,
}

pub const DEFAULT_VIEWS: usize = 2;

impl RunConfig {
    pub fn resolve(flags: Settings, config: Option<&Path>) -> Result<Self, CliError> {
        let settings = match config {
            Some(path) => flags.over(Settings::load(path)?),
            None => flags,
        };
        let defaults = Hyperparameters::default();
        let hyper = Hyperparameters::new(
            settings.a.unwrap_or(defaults.a),
            settings.b.unwrap_or(defaults.b),
            settings.r.unwrap_or(defaults.r),
            settings.gamma.unwrap_or(defaults.gamma),
            settings.k.unwrap_or(defaults.k),
        )
        .map_err(CliError::usage)?;
        let base = InferenceConfig::default();
        let n_sweeps = settings.sweeps.unwrap_or(base.n_sweeps);
        let burn_in = settings
            .burn_in
            .unwrap_or_else(|| base.burn_in.min(n_sweeps / 5));
        let inference = InferenceConfig {
            n_sweeps,
            burn_in,
            seed: settings.seed.unwrap_or(0),
            ..base
        };
        inference.validate().map_err(CliError::usage)?;
        if let Some(path) = &settings.input {
            if !path.exists() {
                return Err(CliError::usage(format!("input file not found: {}", path.display())));
            }
        }
        if let Some(path) = &settings.trace {
            if !path.exists() {
                return Err(CliError::usage(format!("trace file not found: {}", path.display())));
            }
        }
        let jobs = settings.jobs.unwrap_or(1);
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        Ok(Self {
            output_dir: settings.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            format: settings.format.unwrap_or(OutputFormat::Csv),
            jobs,
            hyper,
            inference,
            settings,
        })
    }

    pub fn views(&self) -> usize {
        self.settings.views.unwrap_or(DEFAULT_VIEWS)
    }

    pub fn require_input(&self) -> Result<&Path, CliError> {
        self.settings
            .input
            .as_deref()
            .ok_or_else(|| CliError::usage("--input is required"))
    }

    pub fn prepare_output_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.output_dir).map_err(|e| {
            CliError::usage(format!("cannot create output directory {}: {e}", self.output_dir.display()))
        })
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}
