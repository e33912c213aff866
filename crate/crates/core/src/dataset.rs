//! Shared domain types: the noisy dataset, its sealed ground truth, and the
//! per-epoch working label state.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsrError};

/// Ground-truth class of a sample. `OpenSet` marks content that belongs to
/// none of the task classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrueLabel {
    Class(usize),
    OpenSet,
}

impl TrueLabel {
    pub fn class(self) -> Option<usize> {
        match self {
            TrueLabel::Class(c) => Some(c),
            TrueLabel::OpenSet => None,
        }
    }

    /// Whether the observed label `label` names this ground truth.
    pub fn matches(self, label: usize) -> bool {
        self == TrueLabel::Class(label)
    }
}

/// Evaluation-only information. Selection and relabelling never receive it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub true_labels: Vec<TrueLabel>,
    pub is_noisy: Vec<bool>,
}

impl GroundTruth {
    /// Builds ground truth from true labels, deriving the noisy mask against
    /// the observed labels.
    pub fn from_true_labels(true_labels: Vec<TrueLabel>, observed: &[usize]) -> Self {
        let is_noisy = true_labels
            .iter()
            .zip(observed)
            .map(|(t, &l)| !t.matches(l))
            .collect();
        Self {
            true_labels,
            is_noisy,
        }
    }

    pub fn noisy_count(&self) -> usize {
        self.is_noisy.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    /// N x d embeddings, one row per sample.
    pub features: Array2<f64>,
    /// Observed (possibly wrong) labels in `0..num_classes`.
    pub observed_labels: Vec<usize>,
    pub num_classes: usize,
    pub ground_truth: Option<GroundTruth>,
}

impl NoisyDataset {
    /// A dataset whose observed labels are the true labels.
    pub fn clean(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Self {
        let truth = labels.iter().map(|&l| TrueLabel::Class(l)).collect();
        let ground_truth = Some(GroundTruth::from_true_labels(truth, &labels));
        Self {
            features,
            observed_labels: labels,
            num_classes,
            ground_truth,
        }
    }

    pub fn len(&self) -> usize {
        self.observed_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed_labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn ground_truth(&self) -> Result<&GroundTruth> {
        self.ground_truth.as_ref().ok_or(SsrError::MissingGroundTruth)
    }

    /// Checks every structural invariant, reporting the first offending index.
    pub fn validate(&self) -> Result<()> {
        let n = self.observed_labels.len();
        if n == 0 || self.features.nrows() == 0 {
            return Err(SsrError::EmptyDataset);
        }
        if self.features.nrows() != n {
            return Err(SsrError::ShapeMismatch(format!(
                "{} feature rows for {} labels",
                self.features.nrows(),
                n
            )));
        }
        if self.features.ncols() == 0 {
            return Err(SsrError::ShapeMismatch("feature dimension is 0".into()));
        }
        if self.num_classes < 2 {
            return Err(SsrError::Range(format!(
                "num_classes = {} (need at least 2)",
                self.num_classes
            )));
        }
        if let Some((index, &label)) = self
            .observed_labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= self.num_classes)
        {
            return Err(SsrError::LabelOutOfRange {
                index,
                label,
                num_classes: self.num_classes,
            });
        }
        if let Some(row) = self
            .features
            .rows()
            .into_iter()
            .position(|r| r.iter().any(|v| !v.is_finite()))
        {
            return Err(SsrError::NonFiniteInput { row });
        }
        if let Some(gt) = &self.ground_truth {
            if gt.true_labels.len() != n || gt.is_noisy.len() != n {
                return Err(SsrError::ShapeMismatch(format!(
                    "ground truth has {} labels / {} flags for {} samples",
                    gt.true_labels.len(),
                    gt.is_noisy.len(),
                    n
                )));
            }
            for (index, t) in gt.true_labels.iter().enumerate() {
                if let TrueLabel::Class(label) = *t {
                    if label >= self.num_classes {
                        return Err(SsrError::LabelOutOfRange {
                            index,
                            label,
                            num_classes: self.num_classes,
                        });
                    }
                }
                if gt.is_noisy[index] == t.matches(self.observed_labels[index]) {
                    return Err(SsrError::ShapeMismatch(format!(
                        "noisy flag at index {index} disagrees with labels"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Working labels for one epoch together with the relabel mask and the
/// per-class label counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelState {
    pub working_labels: Vec<usize>,
    pub relabel_mask: Vec<bool>,
    pub class_counts: Vec<usize>,
}

impl LabelState {
    /// State with no relabels.
    pub fn from_observed(observed: &[usize], num_classes: usize) -> Self {
        Self::new(observed.to_vec(), observed, num_classes)
    }

    pub fn new(working_labels: Vec<usize>, observed: &[usize], num_classes: usize) -> Self {
        debug_assert_eq!(working_labels.len(), observed.len());
        let relabel_mask = working_labels
            .iter()
            .zip(observed)
            .map(|(w, o)| w != o)
            .collect();
        let class_counts = class_counts(&working_labels, num_classes);
        Self {
            working_labels,
            relabel_mask,
            class_counts,
        }
    }

    pub fn len(&self) -> usize {
        self.working_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.working_labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn relabelled_count(&self) -> usize {
        self.relabel_mask.iter().filter(|&&b| b).count()
    }
}

pub fn class_counts(labels: &[usize], num_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}
