use ndarray::{array, Array2};
use proptest::prelude::*;
use ssr_core::relabel::relabel_from;
use ssr_core::{relabel, relabel_metrics, GroundTruth, PredictionMatrix, SsrError, TrueLabel};

#[test]
fn confident_prediction_replaces_label() {
    let preds = PredictionMatrix::new(array![[0.95, 0.03, 0.02], [0.2, 0.5, 0.3]]).unwrap();
    let state = relabel(&preds, &[2, 2], 0.9).unwrap();
    assert_eq!(state.working_labels, vec![0, 2]);
    assert_eq!(state.relabel_mask, vec![true, false]);
    assert_eq!(state.class_counts, vec![1, 0, 1]);
}

#[test]
fn threshold_is_strict() {
    let preds = PredictionMatrix::new(array![[0.9, 0.1]]).unwrap();
    assert_eq!(relabel(&preds, &[1], 0.9).unwrap().working_labels, vec![1]);
    assert_eq!(relabel(&preds, &[1], 0.89).unwrap().working_labels, vec![0]);
}

#[test]
fn threshold_one_never_relabels() {
    let preds = PredictionMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert_eq!(relabel(&preds, &[1, 0], 1.0).unwrap().relabelled_count(), 0);
}

#[test]
fn agreeing_prediction_is_not_a_relabel() {
    let preds = PredictionMatrix::new(array![[0.99, 0.01]]).unwrap();
    let state = relabel(&preds, &[0], 0.5).unwrap();
    assert_eq!(state.relabelled_count(), 0);
}

#[test]
fn persistent_variant_falls_back_to_base() {
    let preds = PredictionMatrix::new(array![[0.5, 0.5], [0.95, 0.05]]).unwrap();
    let state = relabel_from(&preds, &[0, 1], &[1, 1], 0.9).unwrap();
    assert_eq!(state.working_labels, vec![0, 0]);
    assert_eq!(state.relabel_mask, vec![true, true]);
}

#[test]
fn invalid_inputs() {
    assert!(matches!(
        PredictionMatrix::new(array![[0.5, 0.6]]),
        Err(SsrError::InvalidProbabilityRow { row: 0 })
    ));
    let preds = PredictionMatrix::new(array![[0.5, 0.5]]).unwrap();
    assert!(matches!(relabel(&preds, &[0], 0.0), Err(SsrError::Range(_))));
    assert!(matches!(relabel(&preds, &[0, 1], 0.5), Err(SsrError::ShapeMismatch(_))));
}

#[test]
fn metrics_count_open_set_as_wrong() {
    let preds = PredictionMatrix::new(array![[0.95, 0.05], [0.02, 0.98], [0.97, 0.03], [0.6, 0.4]]).unwrap();
    let observed = [1, 0, 1, 1];
    let truth = GroundTruth::from_true_labels(
        vec![TrueLabel::Class(0), TrueLabel::Class(0), TrueLabel::OpenSet, TrueLabel::Class(1)],
        &observed,
    );
    let state = relabel(&preds, &observed, 0.9).unwrap();
    let m = relabel_metrics(&state, &truth);
    assert_eq!(m.relabelled_fraction, 0.75);
    assert!((m.relabel_accuracy - 1.0 / 3.0).abs() < 1e-15);
}

fn predictions() -> impl Strategy<Value = (Array2<f64>, Vec<usize>)> {
    (1usize..30, 2usize..6).prop_flat_map(|(n, m)| {
        (
            proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, m), n).prop_map(move |rows| {
                Array2::from_shape_fn((n, m), |(i, j)| rows[i][j] / rows[i].iter().sum::<f64>())
            }),
            proptest::collection::vec(0..m, n),
        )
    })
}

proptest! {
    #[test]
    fn higher_threshold_relabels_a_subset((p, obs) in predictions(), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let preds = PredictionMatrix::new(p).unwrap();
        let s_lo = relabel(&preds, &obs, lo).unwrap();
        let s_hi = relabel(&preds, &obs, hi).unwrap();
        for i in 0..obs.len() {
            prop_assert!(!s_hi.relabel_mask[i] || s_lo.relabel_mask[i]);
        }
    }

    #[test]
    fn relabelled_state_is_consistent((p, obs) in predictions(), theta in 0.01f64..=1.0) {
        let preds = PredictionMatrix::new(p).unwrap();
        let s = relabel(&preds, &obs, theta).unwrap();
        prop_assert_eq!(s.class_counts.iter().sum::<usize>(), obs.len());
        for (i, &o) in obs.iter().enumerate() {
            let (top, prob) = preds.top(i);
            // a label is either the observed one or a confident prediction
            prop_assert!(s.working_labels[i] == o || (s.working_labels[i] == top && prob > theta));
            prop_assert_eq!(s.relabel_mask[i], s.working_labels[i] != o);
        }
    }
}
