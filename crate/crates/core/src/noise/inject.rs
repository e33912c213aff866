use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroundTruth, NoisyDataset, TrueLabel};
use crate::error::{Result, SsrError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Symmetric,
    Asymmetric,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub total_ratio: f64,
    /// Fraction of the noisy samples that are open-set (combined only).
    pub open_ratio: f64,
    /// Partner class for asymmetric flips; `None` resolves to `j -> j + 1 mod M`.
    pub pair_map: Option<Vec<usize>>,
    /// Redraw symmetric labels among the other M - 1 classes only.
    pub exclude_true: bool,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Symmetric,
            total_ratio: 0.5,
            open_ratio: 0.0,
            pair_map: None,
            exclude_true: false,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.total_ratio) {
            return Err(SsrError::Range(format!(
                "total_ratio = {} not in [0, 1]",
                self.total_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.open_ratio) {
            return Err(SsrError::Range(format!(
                "open_ratio = {} not in [0, 1]",
                self.open_ratio
            )));
        }
        if self.open_ratio > 0.0 && self.kind != NoiseKind::Combined {
            return Err(SsrError::Range(
                "open_ratio only applies to combined noise".into(),
            ));
        }
        Ok(())
    }

    /// The pair map used for asymmetric noise over `num_classes` classes.
    pub fn resolved_pair_map(&self, num_classes: usize) -> Vec<usize> {
        self.pair_map
            .clone()
            .unwrap_or_else(|| cyclic_pair_map(num_classes))
    }
}

pub fn cyclic_pair_map(num_classes: usize) -> Vec<usize> {
    (0..num_classes).map(|j| (j + 1) % num_classes).collect()
}

/// `floor(ratio * n)`, robust to representation error in `ratio`.
pub fn ratio_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64 + 1e-9).floor() as usize).min(n)
}

fn true_labels_of(dataset: &NoisyDataset) -> Vec<TrueLabel> {
    match &dataset.ground_truth {
        Some(gt) => gt.true_labels.clone(),
        None => dataset
            .observed_labels
            .iter()
            .map(|&l| TrueLabel::Class(l))
            .collect(),
    }
}

fn rebuild(
    dataset: &NoisyDataset,
    features: Option<Array2<f64>>,
    observed: Vec<usize>,
    truth: Vec<TrueLabel>,
) -> NoisyDataset {
    let ground_truth = Some(GroundTruth::from_true_labels(truth, &observed));
    NoisyDataset {
        features: features.unwrap_or_else(|| dataset.features.clone()),
        observed_labels: observed,
        num_classes: dataset.num_classes,
        ground_truth,
    }
}

fn redraw<R: Rng + ?Sized>(current: usize, m: usize, exclude: bool, rng: &mut R) -> usize {
    if exclude {
        let r = rng.random_range(0..m - 1);
        if r >= current {
            r + 1
        } else {
            r
        }
    } else {
        rng.random_range(0..m)
    }
}

fn symmetric_on<R: Rng + ?Sized>(
    observed: &mut [usize],
    rows: impl IntoIterator<Item = usize>,
    m: usize,
    exclude: bool,
    rng: &mut R,
) {
    for i in rows {
        observed[i] = redraw(observed[i], m, exclude, rng);
    }
}

/// Redraws the labels of a uniformly chosen `floor(ratio * N)` subset
/// uniformly over all classes; a redraw may hit the true label.
pub fn inject_symmetric<R: Rng + ?Sized>(
    dataset: &NoisyDataset,
    ratio: f64,
    rng: &mut R,
) -> NoisyDataset {
    inject_symmetric_with(dataset, ratio, false, rng)
}

/// [`inject_symmetric`] with the option of redrawing among the other
/// `M - 1` classes only.
pub fn inject_symmetric_with<R: Rng + ?Sized>(
    dataset: &NoisyDataset,
    ratio: f64,
    exclude_true: bool,
    rng: &mut R,
) -> NoisyDataset {
    let n = dataset.len();
    let truth = true_labels_of(dataset);
    let mut observed = dataset.observed_labels.clone();
    let chosen = index::sample(rng, n, ratio_count(ratio, n));
    symmetric_on(&mut observed, chosen, dataset.num_classes, exclude_true, rng);
    rebuild(dataset, None, observed, truth)
}

/// Flips `floor(ratio * N_c)` uniformly chosen samples of every class `c` to
/// `pair_map[c]`.
pub fn inject_asymmetric<R: Rng + ?Sized>(
    dataset: &NoisyDataset,
    ratio: f64,
    pair_map: Option<&[usize]>,
    rng: &mut R,
) -> Result<NoisyDataset> {
    let map = pair_map.ok_or(SsrError::MissingPairMap)?;
    let m = dataset.num_classes;
    if map.len() != m {
        return Err(SsrError::InvalidPairMap(format!(
            "{} entries for {m} classes",
            map.len()
        )));
    }
    if let Some(j) = (0..m).find(|&j| map[j] == j || map[j] >= m) {
        return Err(SsrError::InvalidPairMap(format!(
            "class {j} maps to {}",
            map[j]
        )));
    }
    let truth = true_labels_of(dataset);
    let mut observed = dataset.observed_labels.clone();
    for (c, &partner) in map.iter().enumerate() {
        let members: Vec<usize> = (0..dataset.len())
            .filter(|&i| truth[i] == TrueLabel::Class(c))
            .collect();
        for k in index::sample(rng, members.len(), ratio_count(ratio, members.len())) {
            observed[members[k]] = partner;
        }
    }
    Ok(rebuild(dataset, None, observed, truth))
}

/// Makes `floor(total_ratio * N)` samples noisy. The first
/// `floor(open_ratio * noisy)` of them get a distinct pool feature vector and
/// an open-set true label with their observed label kept; the rest get
/// symmetric redraws.
pub fn inject_combined<R: Rng + ?Sized>(
    dataset: &NoisyDataset,
    ood_pool: &Array2<f64>,
    total_ratio: f64,
    open_ratio: f64,
    exclude_true: bool,
    rng: &mut R,
) -> Result<NoisyDataset> {
    let n = dataset.len();
    let noisy = ratio_count(total_ratio, n);
    let open = ratio_count(open_ratio, noisy);
    if ood_pool.nrows() < open {
        return Err(SsrError::OodPoolTooSmall {
            required: open,
            available: ood_pool.nrows(),
        });
    }
    if open > 0 && ood_pool.ncols() != dataset.dim() {
        return Err(SsrError::ShapeMismatch(format!(
            "pool dimension {} vs dataset dimension {}",
            ood_pool.ncols(),
            dataset.dim()
        )));
    }
    let mut truth = true_labels_of(dataset);
    let mut observed = dataset.observed_labels.clone();
    let chosen = index::sample(rng, n, noisy).into_vec();
    let (open_rows, closed_rows) = chosen.split_at(open);
    symmetric_on(
        &mut observed,
        closed_rows.iter().copied(),
        dataset.num_classes,
        exclude_true,
        rng,
    );
    let mut features = dataset.features.clone();
    if open > 0 {
        let picks = index::sample(rng, ood_pool.nrows(), open);
        for (&i, p) in open_rows.iter().zip(picks) {
            features.row_mut(i).assign(&ood_pool.row(p));
            truth[i] = TrueLabel::OpenSet;
        }
    }
    Ok(rebuild(dataset, Some(features), observed, truth))
}

/// Applies `spec` with a generator seeded from `spec.seed`.
pub fn apply_noise(
    dataset: &NoisyDataset,
    ood_pool: &Array2<f64>,
    spec: &NoiseSpec,
) -> Result<NoisyDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        NoiseKind::Symmetric => Ok(inject_symmetric_with(
            dataset,
            spec.total_ratio,
            spec.exclude_true,
            &mut rng,
        )),
        NoiseKind::Asymmetric => {
            let map = spec.resolved_pair_map(dataset.num_classes);
            inject_asymmetric(dataset, spec.total_ratio, Some(&map), &mut rng)
        }
        NoiseKind::Combined => inject_combined(
            dataset,
            ood_pool,
            spec.total_ratio,
            spec.open_ratio,
            spec.exclude_true,
            &mut rng,
        ),
    }
}
