//! Balanced neighbour voting and the label consistency measure.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::knn::NeighbourIndex;
use crate::dataset::LabelState;
use crate::error::{Result, SsrError};

/// Per-sample counts of neighbour labels: `counts[[i, j]]` neighbours of `i`
/// carry working label `j`.
pub fn neighbour_label_counts(index: &NeighbourIndex, labels: &LabelState) -> Array2<u32> {
    let n = index.len();
    let m = labels.num_classes();
    let mut counts = Array2::<u32>::zeros((n, m));
    for i in 0..n {
        for &j in index.neighbours(i) {
            counts[[i, labels.working_labels[j]]] += 1;
        }
    }
    counts
}

/// Normalised neighbour label distribution `q'`, each row summing to one.
pub fn neighbour_label_distribution(index: &NeighbourIndex, labels: &LabelState) -> Array2<f64> {
    let k = index.k() as f64;
    neighbour_label_counts(index, labels).mapv(|c| c as f64 / k)
}

/// Divides each column of `q_raw` by the class count; classes with no
/// samples score 0.
pub fn balance_distribution(q_raw: &Array2<f64>, class_counts: &[usize]) -> Array2<f64> {
    let mut out = q_raw.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        match class_counts[j] {
            0 => col.fill(0.0),
            c => col.mapv_inplace(|v| v / c as f64),
        }
    }
    out
}

/// Ratio of a row's value at `label` to the row maximum.
pub fn consistency_measure(row: ArrayView1<f64>, label: usize) -> Result<f64> {
    let peak = row.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(SsrError::AllZeroRow { row: 0 });
    }
    Ok(row[label] / peak)
}

// Balanced vote of a class as the rational count / prior; prior 0 means 0.
#[derive(Clone, Copy)]
struct Vote {
    count: u64,
    prior: u64,
}

impl Vote {
    // self >= other, compared exactly by cross-multiplication.
    fn at_least(self, other: Vote) -> bool {
        match (self.prior, other.prior) {
            (_, 0) => true,
            (0, _) => other.count == 0,
            (a, b) => self.count as u128 * b as u128 >= other.count as u128 * a as u128,
        }
    }
}

fn priors(class_counts: &[usize], balanced: bool) -> impl Fn(usize) -> u64 + '_ {
    move |j| if balanced { class_counts[j] as u64 } else { 1 }
}

/// Whether `label` attains the maximum balanced vote in `counts`, decided in
/// integer arithmetic.
pub fn label_at_peak(counts: ArrayView1<u32>, class_counts: &[usize], label: usize) -> bool {
    label_at_peak_with(counts, class_counts, label, true)
}

fn label_at_peak_with(
    counts: ArrayView1<u32>,
    class_counts: &[usize],
    label: usize,
    balanced: bool,
) -> bool {
    let prior = priors(class_counts, balanced);
    let mine = Vote {
        count: counts[label] as u64,
        prior: prior(label),
    };
    (0..counts.len()).all(|j| {
        mine.at_least(Vote {
            count: counts[j] as u64,
            prior: prior(j),
        })
    })
}

/// Consistency of `label` against integer vote counts. Returns exactly 1.0
/// iff [`label_at_peak`] holds, and a value strictly below 1.0 otherwise.
pub fn exact_consistency(
    counts: ArrayView1<u32>,
    class_counts: &[usize],
    label: usize,
    balanced: bool,
) -> Result<f64> {
    let prior = priors(class_counts, balanced);
    let value = |j: usize| match prior(j) {
        0 => None,
        p => Some((counts[j] as u64, p)),
    };
    // exact argmax under the rational order
    let mut peak: Option<(u64, u64)> = None;
    for j in 0..counts.len() {
        if let Some((c, p)) = value(j) {
            let better = match peak {
                None => true,
                Some((pc, pp)) => c as u128 * pp as u128 > pc as u128 * p as u128,
            };
            if better {
                peak = Some((c, p));
            }
        }
    }
    let (pc, pp) = match peak {
        Some(v) if v.0 > 0 => v,
        _ => return Err(SsrError::AllZeroRow { row: 0 }),
    };
    if label_at_peak_with(counts, class_counts, label, balanced) {
        return Ok(1.0);
    }
    let Some((c, p)) = value(label) else {
        return Ok(0.0);
    };
    let ratio = (c as f64 * pp as f64) / (pc as f64 * p as f64);
    Ok(ratio.min(1.0f64.next_down()))
}

/// Mask of samples whose consistency reaches `theta_s`.
pub fn select_clean(consistency: &[f64], theta_s: f64) -> Vec<bool> {
    consistency.iter().map(|&c| c >= theta_s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub consistency: Vec<f64>,
    pub clean_mask: Vec<bool>,
    pub q_raw: Array2<f64>,
    pub q_balanced: Array2<f64>,
}

impl SelectionResult {
    pub fn selected_count(&self) -> usize {
        self.clean_mask.iter().filter(|&&b| b).count()
    }

    /// Balanced vote share of each sample's own label, in `[0, 1]`.
    pub fn label_confidence(&self, labels: &LabelState) -> Vec<f64> {
        self.q_balanced
            .rows()
            .into_iter()
            .zip(&labels.working_labels)
            .map(|(row, &l)| {
                let total: f64 = row.sum();
                if total > 0.0 {
                    row[l] / total
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Neighbour-vote selection: counts, optional class-prior balancing,
/// consistency and threshold. With `balanced == false` every class prior is
/// taken as 1.
pub fn select_by_consistency(
    index: &NeighbourIndex,
    labels: &LabelState,
    theta_s: f64,
    balanced: bool,
) -> Result<SelectionResult> {
    if index.len() != labels.len() {
        return Err(SsrError::ShapeMismatch(format!(
            "index over {} samples, labels for {}",
            index.len(),
            labels.len()
        )));
    }
    let counts = neighbour_label_counts(index, labels);
    let consistency = counts
        .rows()
        .into_iter()
        .zip(&labels.working_labels)
        .enumerate()
        .map(|(i, (row, &l))| {
            exact_consistency(row, &labels.class_counts, l, balanced).map_err(|e| match e {
                SsrError::AllZeroRow { .. } => SsrError::AllZeroRow { row: i },
                e => e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let q_raw = counts.mapv(|c| c as f64 / index.k() as f64);
    let q_balanced = if balanced {
        balance_distribution(&q_raw, &labels.class_counts)
    } else {
        q_raw.clone()
    };
    let clean_mask = select_clean(&consistency, theta_s);
    Ok(SelectionResult {
        consistency,
        clean_mask,
        q_raw,
        q_balanced,
    })
}
