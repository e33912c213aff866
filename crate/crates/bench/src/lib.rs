//! Fixtures shared by the benchmarks.

use ndarray::Array2;
use ssr_core::noise::{apply_noise, make_gaussian_dataset};
use ssr_core::{NoiseKind, NoiseSpec, NoisyDataset, SynthSpec};

/// A 40% symmetric-noise Gaussian mixture with `n` samples over four classes.
pub fn noisy_mixture(n: usize, dim: usize) -> NoisyDataset {
    let spec = SynthSpec {
        per_class: n / 4,
        dim,
        ood_classes: 0,
        ..Default::default()
    };
    let data = make_gaussian_dataset(&spec).expect("valid spec");
    let noise = NoiseSpec {
        kind: NoiseKind::Symmetric,
        total_ratio: 0.4,
        ..Default::default()
    };
    apply_noise(&data.train, &Array2::zeros((0, dim)), &noise).expect("valid noise")
}
