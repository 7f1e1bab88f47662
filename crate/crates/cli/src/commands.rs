use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use mvad_core::artifact::{self, ModelArtifact};
use mvad_core::experiment::{
    gen_single_view_anomalies, gen_synthetic_cca, inject_swap_anomalies, parse_libsvm, run_experiment,
    split_views, CcaParams, DataSource, ExperimentSpec, SingleViewParams, DEFAULT_NOISE_SD,
    SINGLE_VIEW_NOISE_SD,
};
use mvad_core::missing::{holdout_cells, impute_from_trace, mean_imputation, DEFAULT_HOLDOUT_FRACTION};
use mvad_core::{anomaly_scores, run_stochastic_em, select_latent_dim, MultiViewDataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{OutputFormat, RunConfig, Source};
use crate::error::CliError;

const DEFAULT_N_INSTANCES: usize = 100;
const DEFAULT_ANOMALY_RATE: f64 = 0.2;
const DEFAULT_N_SEEDS: usize = 10;

fn rng(run: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(run.inference.seed)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::from)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.into()))?;
    text.push('\n');
    Ok(text)
}

/// Reads a dataset: JSON datasets as written by `generate`, anything else as
/// LIBSVM text split into `--views` views.
fn load_dataset(run: &RunConfig) -> Result<MultiViewDataset, CliError> {
    let path = run.require_input()?;
    let input_error = |e: mvad_core::Error| CliError::usage(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|ext| ext == "json") {
        return artifact::read_dataset(path).map_err(input_error);
    }
    let sparse = parse_libsvm(path).map_err(input_error)?;
    let mut rng = rng(run);
    let split = split_views(&sparse.to_dense(), run.views(), &mut rng).map_err(CliError::usage)?;
    match run.settings.anomaly_rate {
        Some(rate) => Ok(inject_swap_anomalies(&split.data, rate, &mut rng)
            .map_err(CliError::usage)?
            .0),
        None => Ok(split.data),
    }
}

fn source(run: &RunConfig) -> Source {
    run.settings.source.unwrap_or(Source::Cca)
}

fn single_view_params(run: &RunConfig) -> SingleViewParams {
    let base = SingleViewParams::default();
    let n = run.settings.n_instances.unwrap_or(base.n_normal + base.n_anomalous);
    let n_anomalous = match run.settings.anomaly_rate {
        Some(rate) => (rate * n as f64).round() as usize,
        None => base.n_anomalous.min(n),
    };
    SingleViewParams {
        n_normal: n - n_anomalous.min(n),
        n_anomalous: n_anomalous.min(n),
        view_dim: run.settings.view_dim.unwrap_or(base.view_dim),
        n_views: run.views(),
        k: run.settings.k_star.unwrap_or(base.k),
        noise_sd: run.settings.noise_sd.unwrap_or(SINGLE_VIEW_NOISE_SD),
        ..base
    }
}

pub fn generate(run: &RunConfig) -> Result<(), CliError> {
    run.prepare_output_dir()?;
    let mut rng = rng(run);
    let data = match source(run) {
        Source::Cca => {
            let params = CcaParams {
                n_instances: run.settings.n_instances.unwrap_or(DEFAULT_N_INSTANCES),
                view_dims: vec![run.settings.view_dim.unwrap_or(10); run.views()],
                k_star: run.settings.k_star.unwrap_or(5),
                anomaly_rate: run.settings.anomaly_rate.unwrap_or(DEFAULT_ANOMALY_RATE),
                noise_sd: run.settings.noise_sd.unwrap_or(DEFAULT_NOISE_SD),
            };
            gen_synthetic_cca(&params, &mut rng).map_err(CliError::usage)?.data
        }
        Source::SingleView => gen_single_view_anomalies(&single_view_params(run), &mut rng)
            .map_err(CliError::usage)?
            .data,
        Source::Libsvm => load_dataset(run)?,
    };
    let path = run.output("dataset.json");
    artifact::write_dataset(&path, &data)?;
    println!(
        "wrote {} ({} instances, view dims {:?})",
        path.display(),
        data.n_instances(),
        data.view_dims()
    );
    Ok(())
}

pub fn fit(run: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(run)?;
    run.prepare_output_dir()?;
    let fit = run_stochastic_em(&data, &run.hyper, &run.inference)?;
    let model = ModelArtifact {
        hyper: run.hyper,
        projections: fit.projections.clone(),
    };
    artifact::write_model(run.output("model.json"), &model)?;
    artifact::write_trace(run.output("trace.json"), &fit.trace)?;
    match fit.final_log_likelihood() {
        Some(ll) => println!("final joint log-likelihood: {ll}"),
        None => println!("final joint log-likelihood: n/a"),
    }
    Ok(())
}

pub fn score(run: &RunConfig) -> Result<(), CliError> {
    let path = run
        .settings
        .trace
        .as_deref()
        .ok_or_else(|| CliError::usage("--trace is required"))?;
    let trace = artifact::read_trace(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let scores = anomaly_scores(&trace).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    run.prepare_output_dir()?;
    let out = match run.format {
        OutputFormat::Csv => {
            let mut text = String::from("instance,score\n");
            for (i, v) in scores.v.iter().enumerate() {
                writeln!(text, "{i},{v}").expect("write to string");
            }
            let out = run.output("scores.csv");
            write_text(&out, &text)?;
            out
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row {
                instance: usize,
                score: f64,
            }
            let rows: Vec<Row> = scores
                .v
                .iter()
                .enumerate()
                .map(|(instance, &score)| Row { instance, score })
                .collect();
            let out = run.output("scores.json");
            write_text(&out, &to_json(&rows)?)?;
            out
        }
    };
    println!("wrote {} ({} instances)", out.display(), scores.v.len());
    Ok(())
}

#[derive(Serialize)]
struct ImputationReport {
    held_out_cells: usize,
    mse: f64,
    mse_mean: f64,
}

pub fn impute(run: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(run)?;
    run.prepare_output_dir()?;
    let holdout = match run.settings.missing_frac {
        Some(f) => Some(holdout_cells(&data, f, &mut rng(run)).map_err(CliError::usage)?),
        None => None,
    };
    let fit_data = holdout.as_ref().map_or(&data, |h| &h.masked);
    let config = mvad_core::InferenceConfig {
        record_states: true,
        ..run.inference.clone()
    };
    let fit = run_stochastic_em(fit_data, &run.hyper, &config)?;
    let result = impute_from_trace(fit_data, &fit.projections, &fit.trace, &run.hyper)?;
    artifact::write_dataset(run.output("imputed.json"), &result.filled)?;
    println!("imputed {} cells", result.cells.len());
    if let Some(h) = &holdout {
        let report = ImputationReport {
            held_out_cells: h.cells.len(),
            mse: h.mse(&result),
            mse_mean: h.mse(&mean_imputation(fit_data)),
        };
        match run.format {
            OutputFormat::Csv => write_text(
                &run.output("imputation.csv"),
                &format!(
                    "held_out_cells,mse,mse_mean\n{},{},{}\n",
                    report.held_out_cells, report.mse, report.mse_mean
                ),
            )?,
            OutputFormat::Json => write_text(&run.output("imputation.json"), &to_json(&report)?)?,
        }
        println!("held-out MSE {} (column means: {})", report.mse, report.mse_mean);
    }
    Ok(())
}

pub fn select_k(run: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(run)?;
    run.prepare_output_dir()?;
    let grid = run.settings.k_grid.clone().unwrap_or_else(|| (2..=10).collect());
    let fraction = run.settings.missing_frac.unwrap_or(DEFAULT_HOLDOUT_FRACTION);
    let pool = rayon_pool(run.jobs)?;
    let selection = pool
        .install(|| select_latent_dim(&data, &grid, &run.hyper, &run.inference, fraction))
        .map_err(CliError::usage)?;
    match run.format {
        OutputFormat::Csv => {
            let mut text = String::from("k,mse\n");
            for (k, mse) in &selection.mse {
                writeln!(text, "{k},{mse}").expect("write to string");
            }
            write_text(&run.output("k_selection.csv"), &text)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                selected: usize,
                mse: &'a [(usize, f64)],
            }
            let out = Out {
                selected: selection.k,
                mse: &selection.mse,
            };
            write_text(&run.output("k_selection.json"), &to_json(&out)?)?;
        }
    }
    println!("selected k = {}", selection.k);
    Ok(())
}

fn rayon_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.into()))
}

pub fn benchmark(run: &RunConfig) -> Result<(), CliError> {
    let n_views = run.views();
    let source = match source(run) {
        Source::Cca => DataSource::SyntheticCca {
            n_instances: run.settings.n_instances.unwrap_or(DEFAULT_N_INSTANCES),
            view_dim: run.settings.view_dim.unwrap_or(10),
            k_star: run.settings.k_star.unwrap_or(5),
            noise_sd: run.settings.noise_sd.unwrap_or(DEFAULT_NOISE_SD),
        },
        Source::SingleView => DataSource::SingleViewAnomalies(single_view_params(run)),
        Source::Libsvm => DataSource::Libsvm {
            path: run.require_input()?.to_path_buf(),
        },
    };
    let first = run.inference.seed;
    let n_seeds = run.settings.n_seeds.unwrap_or(DEFAULT_N_SEEDS) as u64;
    let mut spec = ExperimentSpec::new(
        source,
        n_views,
        run.settings.anomaly_rate.unwrap_or(DEFAULT_ANOMALY_RATE),
        (first..first + n_seeds).collect(),
    );
    spec.hyper = run.hyper;
    spec.config = run.inference.clone();
    spec.missing_frac = run.settings.missing_frac;
    spec.record_timings = run.settings.timings.unwrap_or(false);
    run.prepare_output_dir()?;
    let report = run_experiment(&spec, run.jobs).map_err(|e| match e {
        mvad_core::Error::Parse { .. } | mvad_core::Error::Io(_) => CliError::usage(e),
        other => CliError::from(other),
    })?;
    write_text(&run.output("report.csv"), &report.to_csv()?)?;
    let mut json = report.to_json()?;
    json.push('\n');
    write_text(&run.output("report.json"), &json)?;

    for s in &report.seeds {
        if let Some(err) = &s.error {
            eprintln!("seed {}: {err}", s.seed);
        }
    }
    if report.all_failed() {
        return Err(CliError::Runtime(anyhow::anyhow!("all {} seeds failed", report.seeds.len())));
    }
    let a = &report.aggregate;
    let fmt = |s: &Option<mvad_core::experiment::Summary>| match s {
        Some(s) => format!("{:.4} ± {:.4}", s.mean, s.std_error),
        None => "undefined".into(),
    };
    println!("AUC {} | PCCA AUC {}", fmt(&a.auc), fmt(&a.auc_pcca));
    if spec.missing_frac.is_some() {
        println!(
            "MSE {} | PCCA MSE {} | mean MSE {}",
            fmt(&a.mse),
            fmt(&a.mse_pcca),
            fmt(&a.mse_mean)
        );
    }
    Ok(())
}
