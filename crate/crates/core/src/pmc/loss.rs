//! Cross-entropy, feature-consistency and composite losses with their
//! analytic gradients.

use ndarray::{Array1, Array2, Axis, Zip};

use super::model::{softmax, PmcModel};
use crate::config::FcDistance;
use crate::error::{Result, SsrError};

const LOG_CLAMP: f64 = 1e-12;
const MIN_NORM: f64 = 1e-12;

/// Mean soft-label cross-entropy and its gradient with respect to the logits.
pub fn cross_entropy_loss(probs: &Array2<f64>, soft_labels: &Array2<f64>) -> (f64, Array2<f64>) {
    let b = probs.nrows() as f64;
    let mut loss = 0.0;
    Zip::from(probs).and(soft_labels).for_each(|&p, &y| {
        if y != 0.0 {
            loss -= y * p.max(LOG_CLAMP).ln();
        }
    });
    let grad = (probs - soft_labels) / b;
    (loss / b, grad)
}

/// Per-sample cross-entropy of hard labels.
pub fn per_sample_cross_entropy(probs: &Array2<f64>, labels: &[usize]) -> Vec<f64> {
    probs
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &l)| -row[l].max(LOG_CLAMP).ln())
        .collect()
}

pub fn one_hot(labels: &[usize], num_classes: usize) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), num_classes));
    for (i, &l) in labels.iter().enumerate() {
        y[[i, l]] = 1.0;
    }
    y
}

/// Cross-entropy of `soft_labels` under the model, with parameter gradients.
pub fn cross_entropy_grads(
    model: &PmcModel,
    inputs: &Array2<f64>,
    soft_labels: &Array2<f64>,
) -> Result<(f64, PmcModel)> {
    model.check_input(inputs)?;
    if soft_labels.dim() != (inputs.nrows(), model.num_classes()) {
        return Err(SsrError::ShapeMismatch(format!(
            "labels {:?} for batch of {} and {} classes",
            soft_labels.dim(),
            inputs.nrows(),
            model.num_classes()
        )));
    }
    let mut grads = model.zeros_like();
    let (emb, cache) = model.trunk_forward(inputs);
    let probs = softmax(&model.head.forward(&emb));
    let (loss, grad_logits) = cross_entropy_loss(&probs, soft_labels);
    let grad_emb = model.head.backward(&emb, &grad_logits, &mut grads.head);
    model.trunk_backward(&cache, &grad_emb, &mut grads);
    Ok((loss, grads))
}

/// Unit vectors of each row together with the row norms.
fn normalise_rows(h: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let norms = h.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    if let Some(row) = norms.iter().position(|&n| n < MIN_NORM) {
        return Err(SsrError::ZeroNormEmbedding { row });
    }
    let unit = h / &norms.view().insert_axis(Axis(1));
    Ok((unit, norms))
}

/// Per-row loss between two batches of vectors and its gradients with
/// respect to both, before averaging.
pub fn pairwise_distance(
    h1: &Array2<f64>,
    h2: &Array2<f64>,
    distance: FcDistance,
) -> Result<(Array1<f64>, Array2<f64>, Array2<f64>)> {
    let (u1, n1) = normalise_rows(h1)?;
    let (u2, n2) = normalise_rows(h2)?;
    let cos = (&u1 * &u2).sum_axis(Axis(1));
    // d(-cos)/dh1 = -(u2 - cos u1) / |h1|, symmetric for h2
    let cos_col = cos.view().insert_axis(Axis(1));
    let mut g1 = -(&u2 - &(&u1 * &cos_col)) / n1.view().insert_axis(Axis(1));
    let mut g2 = -(&u1 - &(&u2 * &cos_col)) / n2.view().insert_axis(Axis(1));
    let values = match distance {
        FcDistance::Cosine => -&cos,
        FcDistance::L2 => {
            // |u1 - u2|^2 = 2 - 2 cos
            g1 *= 2.0;
            g2 *= 2.0;
            cos.mapv(|c| 2.0 - 2.0 * c)
        }
    };
    Ok((values, g1, g2))
}

#[derive(Debug, Clone)]
pub struct FcOutput {
    pub loss: f64,
    pub grads: PmcModel,
    pub grad_view1: Array2<f64>,
    /// Exactly zero when the second branch is stop-gradiented.
    pub grad_view2: Array2<f64>,
}

/// Feature-consistency loss between the predictor output of `view1` and the
/// projector output of `view2`.
pub fn feature_consistency_loss(
    model: &PmcModel,
    view1: &Array2<f64>,
    view2: &Array2<f64>,
    distance: FcDistance,
    stop_gradient: bool,
) -> Result<FcOutput> {
    model.check_input(view1)?;
    model.check_input(view2)?;
    if view1.nrows() != view2.nrows() {
        return Err(SsrError::ShapeMismatch(format!(
            "views with {} and {} rows",
            view1.nrows(),
            view2.nrows()
        )));
    }
    let b = view1.nrows() as f64;
    let mut grads = model.zeros_like();

    let (e1, cache1) = model.trunk_forward(view1);
    let z1 = model.projector.forward(&e1);
    let h1 = model.predictor.forward(&z1);
    let (e2, cache2) = model.trunk_forward(view2);
    let h2 = model.projector.forward(&e2);

    let (values, g1, g2) = pairwise_distance(&h1, &h2, distance)?;
    let loss = values.sum() / b;

    let g1 = g1 / b;
    let gz1 = model.predictor.backward(&z1, &g1, &mut grads.predictor);
    let ge1 = model.projector.backward(&e1, &gz1, &mut grads.projector);
    let grad_view1 = model.trunk_backward(&cache1, &ge1, &mut grads);

    let grad_view2 = if stop_gradient {
        Array2::zeros(view2.raw_dim())
    } else {
        let g2 = g2 / b;
        let ge2 = model.projector.backward(&e2, &g2, &mut grads.projector);
        model.trunk_backward(&cache2, &ge2, &mut grads)
    };

    Ok(FcOutput {
        loss,
        grads,
        grad_view1,
        grad_view2,
    })
}

/// One mini-batch: inputs with (possibly mixed) soft labels, and optionally
/// two augmented views for the consistency term.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatch {
    pub inputs: Array2<f64>,
    pub labels: Array2<f64>,
    pub views: Option<(Array2<f64>, Array2<f64>)>,
}

#[derive(Debug, Clone)]
pub struct LossBreakdown {
    pub cross_entropy: f64,
    /// `None` when the consistency weight is 0 and the term was skipped.
    pub consistency: Option<f64>,
    pub total: f64,
    pub grads: PmcModel,
}

/// `L_ce + lambda * L_fc` and its gradient. With `lambda == 0` the
/// consistency term is not evaluated.
pub fn total_loss(
    model: &PmcModel,
    batch: &MiniBatch,
    lambda: f64,
    distance: FcDistance,
    stop_gradient: bool,
) -> Result<LossBreakdown> {
    let (ce, mut grads) = cross_entropy_grads(model, &batch.inputs, &batch.labels)?;
    let mut consistency = None;
    let mut total = ce;
    if lambda > 0.0 {
        if let Some((v1, v2)) = &batch.views {
            let fc = feature_consistency_loss(model, v1, v2, distance, stop_gradient)?;
            grads.add_scaled(&fc.grads, lambda);
            total += lambda * fc.loss;
            consistency = Some(fc.loss);
        }
    }
    Ok(LossBreakdown {
        cross_entropy: ce,
        consistency,
        total,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let p = array![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let (loss, grad) = cross_entropy_loss(&p, &p);
        assert!(loss <= 1e-10);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn uniform_prediction_loss_is_log_m() {
        let p = Array2::from_elem((1, 10), 0.1);
        let y = one_hot(&[3], 10);
        let (loss, _) = cross_entropy_loss(&p, &y);
        assert!((loss - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn parallel_vectors_minimise_cosine() {
        let h1 = array![[1.0, 2.0, 3.0]];
        let h2 = array![[2.0, 4.0, 6.0]];
        let (v, _, _) = pairwise_distance(&h1, &h2, FcDistance::Cosine).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-12);
        let (v, _, _) = pairwise_distance(&h1, &h2, FcDistance::L2).unwrap();
        assert!(v[0].abs() < 1e-12);
    }

    #[test]
    fn orthogonal_vectors() {
        let h1 = array![[1.0, 0.0]];
        let h2 = array![[0.0, 3.0]];
        let (v, _, _) = pairwise_distance(&h1, &h2, FcDistance::Cosine).unwrap();
        assert_eq!(v[0], 0.0);
        let (v, _, _) = pairwise_distance(&h1, &h2, FcDistance::L2).unwrap();
        assert_eq!(v[0], 2.0);
    }

    #[test]
    fn zero_embedding_rejected() {
        let h1 = array![[1.0, 0.0], [0.0, 0.0]];
        let h2 = array![[1.0, 0.0], [1.0, 0.0]];
        assert!(matches!(
            pairwise_distance(&h1, &h2, FcDistance::Cosine),
            Err(SsrError::ZeroNormEmbedding { row: 1 })
        ));
    }
}
