//! Single runs, hyperparameter sweeps and the selection-mode comparison.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ssr_core::noise::{apply_noise, load_embeddings, make_gaussian_dataset};
use ssr_core::{compare_selection_modes, run_experiment, ExperimentRecord, NoisyDataset};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::{create_run_dir, RunManifest};
use crate::output::emit_metrics;

/// Training data plus an optional clean test split.
#[derive(Debug, Clone)]
pub struct RunData {
    pub train: NoisyDataset,
    pub test: Option<NoisyDataset>,
}

impl RunData {
    /// Generates the synthetic dataset and applies the configured noise.
    pub fn synthetic(cfg: &ExperimentConfig) -> Result<Self> {
        let data = make_gaussian_dataset(&cfg.synth_or_default())?;
        let train = match &cfg.noise {
            Some(n) => apply_noise(&data.train, &data.ood_pool, n)?,
            None => data.train,
        };
        Ok(Self {
            train,
            test: Some(data.test),
        })
    }

    pub fn load(train: &Path, test: Option<&Path>) -> Result<Self> {
        Ok(Self {
            train: load_embeddings(train)?,
            test: test.map(load_embeddings).transpose()?,
        })
    }
}

fn annotate(mut record: ExperimentRecord, cfg: &ExperimentConfig) -> ExperimentRecord {
    record.noise = cfg.noise.clone();
    record.synth = cfg.synth.clone();
    record
}

/// Runs one experiment and writes its artifacts to a fresh directory under
/// `root`.
pub fn run_single(
    cfg: &ExperimentConfig,
    data: &RunData,
    root: &Path,
    config_path: Option<&Path>,
) -> Result<(RunManifest, ExperimentRecord)> {
    let mut manifest = RunManifest::start(root, "run", config_path, cfg.train.seed)?;
    let record = run_experiment(&data.train, data.test.as_ref(), &cfg.train)?;
    let record = annotate(record, cfg);
    emit_metrics(&record, &manifest.output_dir)?;
    manifest.finish(cfg)?;
    Ok((manifest, record))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    ThetaS,
    ThetaR,
    K,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::ThetaS => "theta_s",
            SweepParam::ThetaR => "theta_r",
            SweepParam::K => "k_neighbours",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "theta_s" => Ok(SweepParam::ThetaS),
            "theta_r" => Ok(SweepParam::ThetaR),
            "k" | "k_neighbours" => Ok(SweepParam::K),
            other => Err(CliError::UnknownKey(format!("sweep parameter {other}"))),
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParam::ThetaS => cfg.train.theta_s = value,
            SweepParam::ThetaR => cfg.train.theta_r = value,
            SweepParam::K => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(CliError::Range(format!("K = {value} is not a positive integer")));
                }
                cfg.train.k_neighbours = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub value: f64,
    pub manifest: RunManifest,
    pub record: ExperimentRecord,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub dir: PathBuf,
    pub points: Vec<GridPoint>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One independent run per sweep value, executed in parallel, each in its
/// own directory. `summary.csv` lists best and last test accuracy per point.
pub fn run_grid(
    cfg: &ExperimentConfig,
    sweep: &SweepSpec,
    data: &RunData,
    root: &Path,
    config_path: Option<&Path>,
) -> Result<GridOutcome> {
    let configs = sweep
        .values
        .iter()
        .map(|&v| sweep.param.apply(cfg, v))
        .collect::<Result<Vec<_>>>()?;
    let dir = create_run_dir(root, "grid", cfg.train.seed, chrono::Utc::now())?;
    let points = configs
        .par_iter()
        .zip(&sweep.values)
        .map(|(c, &value)| {
            let (manifest, record) = run_single(c, data, &dir, config_path)?;
            Ok(GridPoint { value, manifest, record })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record([sweep.param.name(), "best_test_acc", "last_test_acc", "run_dir"])?;
    for p in &points {
        w.write_record([
            p.value.to_string(),
            fmt_opt(p.record.best_test_accuracy),
            fmt_opt(p.record.last_test_accuracy),
            p.manifest.output_dir.display().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(GridOutcome { dir, points })
}

/// Runs every selection mode on the same data; each mode's artifacts go to a
/// subdirectory named after it, and `summary.csv` collects accuracies.
pub fn run_compare(
    cfg: &ExperimentConfig,
    data: &RunData,
    root: &Path,
    config_path: Option<&Path>,
) -> Result<(RunManifest, Vec<ssr_core::ModeRecord>)> {
    let mut manifest = RunManifest::start(root, "compare", config_path, cfg.train.seed)?;
    let modes = compare_selection_modes(&data.train, data.test.as_ref(), &cfg.train)?;
    let mut w = csv::Writer::from_path(manifest.output_dir.join("summary.csv"))?;
    w.write_record(["mode", "best_test_acc", "last_test_acc"])?;
    for m in &modes {
        let record = annotate(m.record.clone(), cfg);
        let sub = manifest.output_dir.join(m.mode.name());
        fs::create_dir_all(&sub)?;
        emit_metrics(&record, &sub)?;
        w.write_record([
            m.mode.name().to_string(),
            fmt_opt(record.best_test_accuracy),
            fmt_opt(record.last_test_accuracy),
        ])?;
    }
    w.flush()?;
    manifest.finish(cfg)?;
    Ok((manifest, modes))
}
