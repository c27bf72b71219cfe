//! Datasets, metrics, experiment orchestration and reporting.

mod config;
mod dataset;
mod experiment;
mod metrics;

pub use config::{FileConfig, KNOWN_KEYS};
pub use dataset::{load_dataset, save_dataset, synthesize, Dataset, SyntheticFamily};
pub use experiment::{
    emit_report, parse_report, run_experiment, sibling_mse_path, Defense, ExperimentSpec, Task,
    REPORT_HEADER,
};
pub use metrics::{accuracy, argmax, per_subcarrier_mse, psnr, MetricsRecord};
