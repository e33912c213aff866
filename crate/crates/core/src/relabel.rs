//! Confidence-thresholded relabelling from classifier predictions.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroundTruth, LabelState};
use crate::error::{Result, SsrError};

/// Row-stochastic classifier outputs, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix(Array2<f64>);

impl PredictionMatrix {
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        for (row, r) in probs.rows().into_iter().enumerate() {
            let valid = r.iter().all(|&p| p >= 0.0 && p.is_finite())
                && (r.sum() - 1.0).abs() <= 1e-6;
            if !valid {
                return Err(SsrError::InvalidProbabilityRow { row });
            }
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.ncols()
    }

    /// Highest-probability class of row `i` (lowest index on ties) and its
    /// probability.
    pub fn top(&self, i: usize) -> (usize, f64) {
        self.0
            .row(i)
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (j, &p)| {
                if p > best.1 {
                    (j, p)
                } else {
                    best
                }
            })
    }
}

/// Assigns the predicted class wherever its probability strictly exceeds
/// `theta_r`; every other sample keeps its observed label.
pub fn relabel(preds: &PredictionMatrix, observed: &[usize], theta_r: f64) -> Result<LabelState> {
    relabel_from(preds, observed, observed, theta_r)
}

/// Like [`relabel`], but unconfident samples fall back to `base` (e.g. the
/// previous epoch's working labels) instead of the observed labels.
pub fn relabel_from(
    preds: &PredictionMatrix,
    base: &[usize],
    observed: &[usize],
    theta_r: f64,
) -> Result<LabelState> {
    if !(theta_r > 0.0 && theta_r <= 1.0) {
        return Err(SsrError::Range(format!("theta_r = {theta_r} not in (0, 1]")));
    }
    let n = preds.0.nrows();
    if base.len() != n || observed.len() != n {
        return Err(SsrError::ShapeMismatch(format!(
            "{n} prediction rows for {} labels",
            observed.len()
        )));
    }
    let working = (0..n)
        .map(|i| {
            let (class, p) = preds.top(i);
            if p > theta_r {
                class
            } else {
                base[i]
            }
        })
        .collect();
    Ok(LabelState::new(working, observed, preds.num_classes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelabelMetrics {
    pub relabelled_fraction: f64,
    pub relabel_accuracy: f64,
}

/// Fraction of relabelled samples and the share of them whose new label is
/// the true one. Open-set samples never count as correct.
pub fn relabel_metrics(state: &LabelState, truth: &GroundTruth) -> RelabelMetrics {
    let n = state.len();
    let mut relabelled = 0usize;
    let mut correct = 0usize;
    for i in 0..n {
        if state.relabel_mask[i] {
            relabelled += 1;
            if truth.true_labels[i].matches(state.working_labels[i]) {
                correct += 1;
            }
        }
    }
    RelabelMetrics {
        relabelled_fraction: relabelled as f64 / n.max(1) as f64,
        relabel_accuracy: correct as f64 / relabelled.max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TrueLabel;
    use ndarray::array;

    #[test]
    fn confident_sample_relabelled() {
        let p = PredictionMatrix::new(array![[0.95, 0.05], [0.6, 0.4]]).unwrap();
        let s = relabel(&p, &[1, 1], 0.9).unwrap();
        assert_eq!(s.working_labels, vec![0, 1]);
        assert_eq!(s.relabel_mask, vec![true, false]);
        assert_eq!(s.class_counts, vec![1, 1]);
    }

    #[test]
    fn threshold_one_disables_relabelling() {
        let p = PredictionMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = relabel(&p, &[1, 0], 1.0).unwrap();
        assert_eq!(s.working_labels, vec![1, 0]);
        assert_eq!(s.relabelled_count(), 0);
    }

    #[test]
    fn argmax_tie_takes_lowest_class() {
        let p = PredictionMatrix::new(array![[0.0, 0.5, 0.5]]).unwrap();
        let s = relabel(&p, &[0], 0.4).unwrap();
        assert_eq!(s.working_labels, vec![1]);
    }

    #[test]
    fn invalid_rows_rejected() {
        assert_eq!(
            PredictionMatrix::new(array![[0.5, 0.5], [0.7, 0.7]]),
            Err(SsrError::InvalidProbabilityRow { row: 1 })
        );
        assert!(PredictionMatrix::new(array![[1.5, -0.5]]).is_err());
    }

    #[test]
    fn metrics_empty_mask() {
        let s = LabelState::from_observed(&[0, 1], 2);
        let gt = GroundTruth::from_true_labels(vec![TrueLabel::Class(0); 2], &[0, 1]);
        let m = relabel_metrics(&s, &gt);
        assert_eq!(m.relabelled_fraction, 0.0);
        assert_eq!(m.relabel_accuracy, 0.0);
    }

    #[test]
    fn metrics_count_correct_relabels() {
        let observed = vec![1; 20];
        let mut working = observed.clone();
        for w in working.iter_mut().take(10) {
            *w = 0;
        }
        let s = LabelState::new(working, &observed, 2);
        let mut truth = vec![TrueLabel::Class(0); 9];
        truth.extend(vec![TrueLabel::Class(1); 11]);
        let gt = GroundTruth::from_true_labels(truth, &observed);
        let m = relabel_metrics(&s, &gt);
        assert_eq!(m.relabelled_fraction, 0.5);
        assert!((m.relabel_accuracy - 0.9).abs() < 1e-12);
    }

    #[test]
    fn open_set_relabel_is_incorrect() {
        let s = LabelState::new(vec![0], &[1], 2);
        let gt = GroundTruth::from_true_labels(vec![TrueLabel::OpenSet], &[1]);
        assert_eq!(relabel_metrics(&s, &gt).relabel_accuracy, 0.0);
    }

    #[test]
    fn stateless_relabel_is_repeatable() {
        let p = PredictionMatrix::new(array![[0.95, 0.05], [0.2, 0.8]]).unwrap();
        let a = relabel(&p, &[1, 0], 0.9).unwrap();
        let b = relabel(&p, &[1, 0], 0.9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn persistent_relabel_keeps_previous() {
        let p = PredictionMatrix::new(array![[0.6, 0.4]]).unwrap();
        let s = relabel_from(&p, &[0], &[1], 0.9).unwrap();
        assert_eq!(s.working_labels, vec![0]);
        assert_eq!(s.relabel_mask, vec![true]);
    }
}
