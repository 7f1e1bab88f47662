//! Benchmark harness: data sources, view splitting, anomaly injection,
//! metrics and multi-seed experiment runs.

mod libsvm;
mod metrics;
mod runner;
mod synthetic;
mod views;

pub use libsvm::{parse_libsvm, parse_libsvm_str, SparseDataset};
pub use metrics::{auc, summarize, Summary};
pub use runner::{
    build_dataset, run_experiment, AggregateMetrics, DataSource, ExperimentSpec, MetricsReport, SeedMetrics,
};
pub use synthetic::{
    gen_single_view_anomalies, gen_synthetic_cca, CcaParams, LatentScale, SingleViewParams, SyntheticData,
    DEFAULT_NOISE_SD, SINGLE_VIEW_NOISE_SD,
};
pub use views::{inject_swap_anomalies, split_views, swap_anomaly_count, ViewSplit};
