use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssr_bench::noisy_mixture;
use ssr_core::pmc::{EpochTrainer, OptimizerState};
use ssr_core::selector::knn::build_neighbour_index;
use ssr_core::selector::voting::select_by_consistency;
use ssr_core::{LabelState, PmcModel, TrainConfig};

fn neighbour_index(c: &mut Criterion) {
    let mut group = c.benchmark_group("neighbour_index");
    group.sample_size(10);
    for n in [500, 2000] {
        let data = noisy_mixture(n, 32);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, d| {
            b.iter(|| build_neighbour_index(&d.features, 100).unwrap())
        });
    }
    group.finish();
}

fn balanced_vote(c: &mut Criterion) {
    let data = noisy_mixture(2000, 32);
    let index = build_neighbour_index(&data.features, 100).unwrap();
    let labels = LabelState::from_observed(&data.observed_labels, data.num_classes);
    c.bench_function("balanced_vote_2000", |b| {
        b.iter(|| select_by_consistency(&index, &labels, 1.0, true).unwrap())
    });
}

fn training_epoch(c: &mut Criterion) {
    let data = noisy_mixture(2000, 16);
    let config = TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = PmcModel::new(data.dim(), &config.hidden_dims, data.num_classes, 32, &mut rng);
    let mut opt = OptimizerState::new(&model, config.learning_rate, config.momentum, config.weight_decay, config.epochs);
    let mut trainer = EpochTrainer::new(&data.features, &config);
    let order: Vec<usize> = (0..data.len()).collect();
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("epoch_2000", |b| {
        b.iter(|| trainer.train_epoch(&mut model, &mut opt, &order, &data.observed_labels, &mut rng).unwrap())
    });
    group.finish();
}

criterion_group!(benches, neighbour_index, balanced_vote, training_epoch);
criterion_main!(benches);
