//! Experiment runner around `ssr_core`: configuration parsing, run
//! directories, metric files, sweeps and the selection-mode comparison.

pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_str, ExperimentConfig};
pub use error::{CliError, Result};
pub use manifest::{create_run_dir, RunManifest, ARTIFACT_VERSION};
pub use output::{emit_metrics, write_metrics_csv, METRICS_HEADER};
pub use run::{run_compare, run_grid, run_single, GridOutcome, GridPoint, RunData, SweepParam, SweepSpec};
