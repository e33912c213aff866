use ssr_core::noise::apply_noise;
use ssr_core::noise::make_gaussian_dataset;
use ssr_core::{
    compare_selection_modes, run_experiment, selection_metrics, ComparisonMode, LabelState, NoiseKind, NoiseSpec,
    NoisyDataset, SelectionMode, SynthData, SynthSpec, TrainConfig,
};

fn data(per_class: usize) -> SynthData {
    make_gaussian_dataset(&SynthSpec {
        per_class,
        seed: 3,
        ..Default::default()
    })
    .unwrap()
}

fn noisy(d: &SynthData, ratio: f64) -> NoisyDataset {
    let spec = NoiseSpec {
        kind: NoiseKind::Symmetric,
        total_ratio: ratio,
        seed: 4,
        ..Default::default()
    };
    apply_noise(&d.train, &d.ood_pool, &spec).unwrap()
}

fn quick() -> TrainConfig {
    TrainConfig {
        epochs: 6,
        k_neighbours: 20,
        record_timings: false,
        ..Default::default()
    }
}

#[test]
fn clean_data_is_almost_all_selected() {
    let d = make_gaussian_dataset(&SynthSpec {
        per_class: 500,
        separation: 8.0,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let record = run_experiment(&d.train, Some(&d.test), &TrainConfig { k_neighbours: 100, ..quick() }).unwrap();
    for e in &record.epochs[2..] {
        let recall = e.selection_recall.unwrap();
        assert!(recall >= 0.95, "epoch {}: {recall}", e.epoch);
    }
}

#[test]
fn identical_records_for_identical_seeds() {
    let d = data(60);
    let train = noisy(&d, 0.4);
    let a = run_experiment(&train, Some(&d.test), &quick()).unwrap();
    let b = run_experiment(&train, Some(&d.test), &quick()).unwrap();
    assert_eq!(a, b);
    let c = run_experiment(&train, Some(&d.test), &TrainConfig { seed: 1, ..quick() }).unwrap();
    assert_ne!(a.epochs, c.epochs);
}

#[test]
fn best_and_last_accuracy() {
    let d = data(60);
    let record = run_experiment(&noisy(&d, 0.4), Some(&d.test), &quick()).unwrap();
    let accs: Vec<f64> = record.epochs.iter().map(|e| e.test_accuracy.unwrap()).collect();
    assert_eq!(record.epochs.len(), 6);
    assert_eq!(record.best_test_accuracy, Some(accs.iter().cloned().fold(f64::MIN, f64::max)));
    assert_eq!(record.last_test_accuracy, accs.last().copied());
    assert_eq!(record.last().epoch, 5);
}

#[test]
fn phase_timings_fit_in_the_epoch() {
    let d = data(60);
    let config = TrainConfig {
        record_timings: true,
        ..quick()
    };
    let record = run_experiment(&noisy(&d, 0.4), Some(&d.test), &config).unwrap();
    for e in &record.epochs {
        let phases = e.t_train_s + e.t_feat_s + e.t_select_s + e.t_relabel_s;
        assert!(phases > 0.0 && phases <= e.t_epoch_s, "{phases} vs {}", e.t_epoch_s);
    }
}

#[test]
fn ground_truth_only_feeds_metrics() {
    let d = data(60);
    let with = noisy(&d, 0.5);
    let without = NoisyDataset {
        ground_truth: None,
        ..with.clone()
    };
    let a = run_experiment(&with, Some(&d.test), &quick()).unwrap();
    let b = run_experiment(&without, Some(&d.test), &quick()).unwrap();
    for (x, y) in a.epochs.iter().zip(&b.epochs) {
        assert_eq!(x.relabelled_fraction, y.relabelled_fraction);
        assert_eq!(x.selected_count, y.selected_count);
        assert_eq!(x.train_loss, y.train_loss);
        assert_eq!(x.test_accuracy, y.test_accuracy);
        assert!(y.selection_precision.is_none() && y.relabel_accuracy.is_none());
    }
}

#[test]
fn whole_dataset_mode_is_plain_training() {
    let c = ComparisonMode::WholeDataset.config(&quick(), 0.3);
    assert_eq!((c.theta_s, c.theta_r, c.lambda_fc), (0.0, 1.0, 0.0));
    assert_eq!(c.selection, SelectionMode::Consistency);
    let d = data(40);
    let train = noisy(&d, 0.3);
    let modes = compare_selection_modes(&train, Some(&d.test), &TrainConfig { epochs: 2, ..quick() }).unwrap();
    assert_eq!(modes.len(), ComparisonMode::ALL.len());
    let whole = modes.iter().find(|m| m.mode == ComparisonMode::WholeDataset).unwrap();
    let manual = TrainConfig {
        epochs: 2,
        theta_s: 0.0,
        theta_r: 1.0,
        lambda_fc: 0.0,
        ..quick()
    };
    let direct = run_experiment(&train, Some(&d.test), &manual).unwrap();
    assert_eq!(whole.record.epochs, direct.epochs);
    assert!(whole.record.epochs.iter().all(|e| e.selected_count == train.len()));
}

#[test]
fn selecting_everything_scores_the_clean_share() {
    let d = make_gaussian_dataset(&SynthSpec {
        num_classes: 10,
        per_class: 1000,
        dim: 16,
        ood_classes: 0,
        ..Default::default()
    })
    .unwrap();
    let train = noisy(&d, 0.5);
    let state = LabelState::from_observed(&train.observed_labels, 10);
    let m = selection_metrics(&vec![true; train.len()], &state, train.ground_truth.as_ref().unwrap());
    // half the labels are redrawn and a tenth of those land on the true class
    assert!((m.precision - 0.55).abs() < 0.01, "{}", m.precision);
    assert_eq!(m.recall, 1.0);
}
