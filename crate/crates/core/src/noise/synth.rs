use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::NoisyDataset;
use crate::error::{Result, SsrError};

/// Name of the generator behind every seeded stream in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Isotropic Gaussian class clusters with unit within-class std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub num_classes: usize,
    /// Training samples of the largest class.
    pub per_class: usize,
    pub dim: usize,
    /// Pairwise distance between class centres in units of the within-class std.
    pub separation: f64,
    pub seed: u64,
    /// Extra clusters feeding the out-of-distribution pool.
    pub ood_classes: usize,
    /// Rows in the out-of-distribution pool; `None` means one per training sample.
    pub ood_size: Option<usize>,
    /// Clean test samples per class, as a fraction of `per_class`.
    pub test_fraction: f64,
    /// Largest-to-smallest class size ratio; sizes decay geometrically.
    pub imbalance_ratio: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_classes: 4,
            per_class: 500,
            dim: 16,
            separation: 4.0,
            seed: 0,
            ood_classes: 12,
            ood_size: None,
            test_fraction: 0.1,
            imbalance_ratio: 1.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(SsrError::Range(m));
        if self.num_classes < 2 {
            return fail(format!("num_classes = {} (need >= 2)", self.num_classes));
        }
        if self.per_class < 1 {
            return fail("per_class must be >= 1".into());
        }
        if self.dim < self.num_classes + self.ood_classes {
            return fail(format!(
                "dim = {} cannot hold {} class and {} pool centres",
                self.dim, self.num_classes, self.ood_classes
            ));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return fail(format!("separation = {} must be >= 0", self.separation));
        }
        if !(0.0..=1.0).contains(&self.test_fraction) {
            return fail(format!("test_fraction = {} not in [0, 1]", self.test_fraction));
        }
        if !(self.imbalance_ratio >= 1.0 && self.imbalance_ratio.is_finite()) {
            return fail(format!("imbalance_ratio = {} must be >= 1", self.imbalance_ratio));
        }
        Ok(())
    }

    /// Training samples per class.
    pub fn class_sizes(&self) -> Vec<usize> {
        let m = self.num_classes;
        (0..m)
            .map(|c| {
                let decay = self.imbalance_ratio.powf(-(c as f64) / (m - 1) as f64);
                ((self.per_class as f64 * decay).round() as usize).max(1)
            })
            .collect()
    }

    pub fn test_per_class(&self) -> usize {
        (self.per_class as f64 * self.test_fraction).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub train: NoisyDataset,
    /// Clean, class-balanced held-out split; empty when `test_fraction` is 0.
    pub test: NoisyDataset,
    pub ood_pool: Array2<f64>,
}

// Centre k sits on axis k at distance separation / sqrt(2) from the origin,
// so any two centres are `separation` apart.
fn sample_cluster(
    centre: usize,
    count: usize,
    dim: usize,
    separation: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let offset = separation / std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for j in 0..dim {
            let z: f64 = StandardNormal.sample(rng);
            out.push(z + if j == centre { offset } else { 0.0 });
        }
    }
    out
}

fn labelled_split(
    spec: &SynthSpec,
    sizes: &[usize],
    rng: &mut ChaCha8Rng,
) -> NoisyDataset {
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
    for (c, &count) in sizes.iter().enumerate() {
        let flat = sample_cluster(c, count, spec.dim, spec.separation, rng);
        rows.extend(flat.chunks(spec.dim).map(|r| (r.to_vec(), c)));
    }
    rows.shuffle(rng);
    let n = rows.len();
    let mut flat = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for (r, c) in rows {
        flat.extend(r);
        labels.push(c);
    }
    let features = Array2::from_shape_vec((n, spec.dim), flat).expect("rectangular");
    NoisyDataset::clean(features, labels, spec.num_classes)
}

/// Draws a clean training split, a clean test split and an
/// out-of-distribution pool. Deterministic per seed.
pub fn make_gaussian_dataset(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sizes = spec.class_sizes();
    let train = labelled_split(spec, &sizes, &mut rng);
    let test = labelled_split(spec, &vec![spec.test_per_class(); spec.num_classes], &mut rng);

    let pool_size = spec.ood_size.unwrap_or(train.len());
    let mut pool = Vec::with_capacity(pool_size * spec.dim);
    if spec.ood_classes > 0 {
        for k in 0..pool_size {
            let centre = spec.num_classes + k % spec.ood_classes;
            pool.extend(sample_cluster(centre, 1, spec.dim, spec.separation, &mut rng));
        }
    }
    let rows = if spec.ood_classes > 0 { pool_size } else { 0 };
    let ood_pool = Array2::from_shape_vec((rows, spec.dim), pool).expect("rectangular");
    Ok(SynthData {
        train,
        test,
        ood_pool,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let spec = SynthSpec {
            per_class: 50,
            ..Default::default()
        };
        let a = make_gaussian_dataset(&spec).unwrap();
        let b = make_gaussian_dataset(&spec).unwrap();
        assert_eq!(a, b);
        let c = make_gaussian_dataset(&SynthSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.train.features, c.train.features);
    }

    #[test]
    fn sizes_and_labels() {
        let spec = SynthSpec {
            per_class: 100,
            ood_size: Some(37),
            ..Default::default()
        };
        let d = make_gaussian_dataset(&spec).unwrap();
        assert_eq!(d.train.len(), 400);
        assert_eq!(d.test.len(), 40);
        assert_eq!(d.ood_pool.dim(), (37, 16));
        d.train.validate().unwrap();
        assert_eq!(d.train.ground_truth.as_ref().unwrap().noisy_count(), 0);
    }

    #[test]
    fn imbalanced_sizes() {
        let spec = SynthSpec {
            num_classes: 4,
            per_class: 400,
            imbalance_ratio: 10.0,
            ..Default::default()
        };
        let sizes = spec.class_sizes();
        assert_eq!(sizes[0], 400);
        assert_eq!(sizes[3], 40);
        assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn too_small_dimension_rejected() {
        let spec = SynthSpec {
            num_classes: 10,
            dim: 8,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }
}
