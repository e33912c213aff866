//! The per-epoch loop: relabel, select, train, evaluate.

use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{SelectionMode, TrainConfig};
use crate::dataset::{GroundTruth, LabelState, NoisyDataset};
use crate::error::{Result, SsrError};
use crate::noise::{NoiseSpec, SynthSpec};
use crate::pmc::{per_sample_cross_entropy, EpochTrainer, OptimizerState, PmcModel};
use crate::relabel::{relabel, relabel_from, relabel_metrics, PredictionMatrix};
use crate::selector::{
    baseline_gmm_loss, baseline_small_loss_predefined, build_neighbour_index,
    select_by_consistency,
};

// Offset separating the training stream from the initialisation stream.
const TRAIN_STREAM: u64 = 0x005E_ED0F_7A1E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

/// Precision and recall of a selection against the samples whose working
/// label is correct.
pub fn selection_metrics(clean_mask: &[bool], state: &LabelState, truth: &GroundTruth) -> SelectionMetrics {
    let mut tp = 0usize;
    let mut selected = 0usize;
    let mut correct = 0usize;
    for (i, &sel) in clean_mask.iter().enumerate() {
        let ok = truth.true_labels[i].matches(state.working_labels[i]);
        correct += ok as usize;
        if sel {
            selected += 1;
            tp += ok as usize;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, selected);
    let recall = ratio(tp, correct);
    SelectionMetrics {
        precision,
        recall,
        fscore: harmonic_mean(precision, recall),
    }
}

pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// Accuracy and macro-averaged F1 of hard predictions.
pub fn classification_scores(predicted: &[usize], truth: &[usize], num_classes: usize) -> Evaluation {
    let mut tp = vec![0usize; num_classes];
    let mut pred_count = vec![0usize; num_classes];
    let mut true_count = vec![0usize; num_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        pred_count[p] += 1;
        true_count[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let correct: usize = tp.iter().sum();
    let present: Vec<usize> = (0..num_classes).filter(|&c| true_count[c] > 0).collect();
    let f1_sum: f64 = present
        .iter()
        .map(|&c| {
            let p = if pred_count[c] == 0 { 0.0 } else { tp[c] as f64 / pred_count[c] as f64 };
            let r = tp[c] as f64 / true_count[c] as f64;
            harmonic_mean(p, r)
        })
        .sum();
    Evaluation {
        accuracy: correct as f64 / predicted.len().max(1) as f64,
        macro_f1: f1_sum / present.len().max(1) as f64,
    }
}

/// Accuracy of `model` on a clean labelled split.
pub fn evaluate(model: &PmcModel, test: &NoisyDataset) -> Result<Evaluation> {
    let probs = model.forward(&test.features)?.probs;
    let predicted = argmax_rows(&probs);
    Ok(classification_scores(&predicted, &test.observed_labels, test.num_classes))
}

fn argmax_rows(probs: &Array2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (j, &p)| if p > b.1 { (j, p) } else { b })
                .0
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub relabelled_fraction: f64,
    pub relabel_accuracy: Option<f64>,
    pub selection_precision: Option<f64>,
    pub selection_recall: Option<f64>,
    pub selection_fscore: Option<f64>,
    pub selected_count: usize,
    /// Samples actually trained on, after the empty-selection fallback.
    pub trained_count: usize,
    pub test_accuracy: Option<f64>,
    pub test_macro_f1: Option<f64>,
    pub train_loss: f64,
    pub t_train_s: f64,
    pub t_feat_s: f64,
    pub t_select_s: f64,
    pub t_relabel_s: f64,
    pub t_epoch_s: f64,
    /// Set when the selection was empty and the epoch fell back.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: TrainConfig,
    pub noise: Option<NoiseSpec>,
    pub synth: Option<SynthSpec>,
    pub epochs: Vec<EpochMetrics>,
    pub best_test_accuracy: Option<f64>,
    pub last_test_accuracy: Option<f64>,
}

impl ExperimentRecord {
    pub fn last(&self) -> &EpochMetrics {
        self.epochs.last().expect("at least one epoch")
    }
}

struct Timer {
    enabled: bool,
    start: Instant,
}

impl Timer {
    fn start(enabled: bool) -> Self {
        Self {
            enabled,
            start: Instant::now(),
        }
    }

    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let dt = now.duration_since(self.start).as_secs_f64();
        self.start = now;
        if self.enabled {
            dt
        } else {
            0.0
        }
    }
}

fn selection_mask(
    config: &TrainConfig,
    dataset: &NoisyDataset,
    embeddings: &Array2<f64>,
    probs: &Array2<f64>,
    state: &LabelState,
) -> Result<Vec<bool>> {
    match config.selection {
        SelectionMode::Consistency => {
            let index = build_neighbour_index(embeddings, config.k_neighbours)?;
            Ok(select_by_consistency(&index, state, config.theta_s, config.balanced)?.clean_mask)
        }
        SelectionMode::PredefinedConsistency => {
            let index = build_neighbour_index(embeddings, config.k_neighbours)?;
            let sel = select_by_consistency(&index, state, 0.0, config.balanced)?;
            let losses: Vec<f64> = sel.label_confidence(state).iter().map(|c| 1.0 - c).collect();
            Ok(baseline_small_loss_predefined(&losses, config.tau))
        }
        SelectionMode::GmmLoss => {
            let losses = per_sample_cross_entropy(probs, &state.working_labels);
            match baseline_gmm_loss(&losses) {
                Err(SsrError::DegenerateFit { .. }) => {
                    Ok(baseline_small_loss_predefined(&losses, config.tau))
                }
                other => other,
            }
        }
        SelectionMode::PredefinedLoss => {
            let losses = per_sample_cross_entropy(probs, &state.working_labels);
            Ok(baseline_small_loss_predefined(&losses, config.tau))
        }
        SelectionMode::Oracle => {
            let gt = dataset.ground_truth()?;
            Ok(gt.is_noisy.iter().map(|&b| !b).collect())
        }
    }
}

/// Trains from scratch for `config.epochs` epochs. Each epoch predicts on
/// the clean inputs, relabels confident samples, selects a clean subset from
/// the current embeddings, trains one pass on the balanced subset, then
/// records metrics. Ground truth and `test` only feed the metrics.
pub fn run_experiment(
    dataset: &NoisyDataset,
    test: Option<&NoisyDataset>,
    config: &TrainConfig,
) -> Result<ExperimentRecord> {
    config.validate()?;
    dataset.validate()?;
    if let Some(t) = test {
        t.validate()?;
    }
    let n = dataset.len();
    if matches!(
        config.selection,
        SelectionMode::Consistency | SelectionMode::PredefinedConsistency
    ) && config.k_neighbours >= n
    {
        return Err(SsrError::KTooLarge {
            k: config.k_neighbours,
            available: n - 1,
        });
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ TRAIN_STREAM);
    let projection = config.projection_dim.unwrap_or(config.embedding_dim());
    let mut model = PmcModel::new(
        dataset.dim(),
        &config.hidden_dims,
        dataset.num_classes,
        projection,
        &mut init_rng,
    );
    let mut opt = OptimizerState::new(
        &model,
        config.learning_rate,
        config.momentum,
        config.weight_decay,
        config.epochs,
    );
    let mut trainer = EpochTrainer::new(&dataset.features, config);
    let truth = dataset.ground_truth.as_ref();
    let mut previous = dataset.observed_labels.clone();
    let mut epochs = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        opt.epoch = epoch;
        let epoch_start = Instant::now();
        let mut timer = Timer::start(config.record_timings);

        let fwd = model.forward(&dataset.features)?;
        let t_feat_s = timer.lap();

        let preds = PredictionMatrix::new(fwd.probs)?;
        let state = if config.persistent_relabel {
            relabel_from(&preds, &previous, &dataset.observed_labels, config.theta_r)?
        } else {
            relabel(&preds, &dataset.observed_labels, config.theta_r)?
        };
        let t_relabel_s = timer.lap();

        let mask = selection_mask(config, dataset, &fwd.embeddings, preds.probs(), &state)?;
        let t_select_s = timer.lap();

        let mut chosen: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let selected_count = chosen.len();
        let mut note = None;
        if chosen.is_empty() {
            chosen = (0..n).filter(|&i| state.relabel_mask[i]).collect();
            note = Some(if chosen.is_empty() {
                "empty selection; gradient step skipped".to_string()
            } else {
                format!("empty selection; trained on {} relabelled samples", chosen.len())
            });
        }
        let mut train_loss = 0.0;
        if !chosen.is_empty() {
            let order = if config.balanced {
                crate::pmc::oversample_balanced(&chosen, &state.working_labels, &mut rng)?
            } else {
                chosen.shuffle(&mut rng);
                chosen.clone()
            };
            let loss = trainer.train_epoch(&mut model, &mut opt, &order, &state.working_labels, &mut rng)?;
            train_loss = loss.cross_entropy;
            if !model.is_finite() {
                return Err(SsrError::Diverged { epoch });
            }
        }
        let t_train_s = timer.lap();

        let relabel_m = truth.map(|gt| relabel_metrics(&state, gt));
        let sel_m = truth.map(|gt| selection_metrics(&mask, &state, gt));
        let eval = test.map(|t| evaluate(&model, t)).transpose()?;
        let t_epoch_s = if config.record_timings {
            epoch_start.elapsed().as_secs_f64()
        } else {
            0.0
        };

        epochs.push(EpochMetrics {
            epoch,
            relabelled_fraction: state.relabelled_count() as f64 / n as f64,
            relabel_accuracy: relabel_m.map(|m| m.relabel_accuracy),
            selection_precision: sel_m.map(|m| m.precision),
            selection_recall: sel_m.map(|m| m.recall),
            selection_fscore: sel_m.map(|m| m.fscore),
            selected_count,
            trained_count: chosen.len(),
            test_accuracy: eval.map(|e| e.accuracy),
            test_macro_f1: eval.map(|e| e.macro_f1),
            train_loss,
            t_train_s,
            t_feat_s,
            t_select_s,
            t_relabel_s,
            t_epoch_s,
            note,
        });
        previous = state.working_labels;
    }

    let best = epochs
        .iter()
        .filter_map(|e| e.test_accuracy)
        .fold(None, |b: Option<f64>, a| Some(b.map_or(a, |b| b.max(a))));
    let last = epochs.last().and_then(|e| e.test_accuracy);
    Ok(ExperimentRecord {
        config: config.clone(),
        noise: None,
        synth: None,
        epochs,
        best_test_accuracy: best,
        last_test_accuracy: last,
    })
}

/// Selection strategies compared against each other, plus the two
/// reference runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    NpkAutomatic,
    PmcAutomatic,
    NpkPredefined,
    PmcPredefined,
    WholeDataset,
    CleanSubset,
}

impl ComparisonMode {
    pub const ALL: [ComparisonMode; 6] = [
        ComparisonMode::NpkAutomatic,
        ComparisonMode::PmcAutomatic,
        ComparisonMode::NpkPredefined,
        ComparisonMode::PmcPredefined,
        ComparisonMode::WholeDataset,
        ComparisonMode::CleanSubset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComparisonMode::NpkAutomatic => "npk_automatic",
            ComparisonMode::PmcAutomatic => "pmc_automatic",
            ComparisonMode::NpkPredefined => "npk_predefined",
            ComparisonMode::PmcPredefined => "pmc_predefined",
            ComparisonMode::WholeDataset => "whole_dataset",
            ComparisonMode::CleanSubset => "clean_subset",
        }
    }

    /// The run configuration for this mode. Relabelling and the consistency
    /// loss are disabled in every mode; `tau` is the true noise ratio.
    pub fn config(self, base: &TrainConfig, tau: f64) -> TrainConfig {
        let mut c = TrainConfig {
            theta_r: 1.0,
            lambda_fc: 0.0,
            tau,
            ..base.clone()
        };
        match self {
            ComparisonMode::NpkAutomatic => c.selection = SelectionMode::Consistency,
            ComparisonMode::PmcAutomatic => c.selection = SelectionMode::GmmLoss,
            ComparisonMode::NpkPredefined => c.selection = SelectionMode::PredefinedConsistency,
            ComparisonMode::PmcPredefined => c.selection = SelectionMode::PredefinedLoss,
            ComparisonMode::WholeDataset => {
                c.selection = SelectionMode::Consistency;
                c.theta_s = 0.0;
            }
            ComparisonMode::CleanSubset => c.selection = SelectionMode::Oracle,
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub mode: ComparisonMode,
    pub record: ExperimentRecord,
}

/// Runs every [`ComparisonMode`] on the same data and base configuration.
pub fn compare_selection_modes(
    dataset: &NoisyDataset,
    test: Option<&NoisyDataset>,
    config: &TrainConfig,
) -> Result<Vec<ModeRecord>> {
    let gt = dataset.ground_truth()?;
    let tau = (gt.noisy_count() as f64 / dataset.len() as f64).min(1.0f64.next_down());
    ComparisonMode::ALL
        .iter()
        .map(|&mode| {
            Ok(ModeRecord {
                mode,
                record: run_experiment(dataset, test, &mode.config(config, tau))?,
            })
        })
        .collect()
}
