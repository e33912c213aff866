use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Draws from `Beta(alpha, alpha)` as `X / (X + Y)` with `X, Y ~ Gamma(alpha, 1)`.
pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha > 0");
    let x: f64 = gamma.sample(rng);
    let y: f64 = gamma.sample(rng);
    if x + y == 0.0 {
        0.5
    } else {
        x / (x + y)
    }
}

/// `gamma * row + (1 - gamma) * partner_row` for inputs and labels alike.
pub fn mix_with(
    inputs: &Array2<f64>,
    labels: &Array2<f64>,
    partners: &[usize],
    gamma: f64,
) -> (Array2<f64>, Array2<f64>) {
    let mix = |a: &Array2<f64>| {
        let b = a.select(Axis(0), partners);
        a * gamma + &(b * (1.0 - gamma))
    };
    (mix(inputs), mix(labels))
}

/// Mixup with one `Beta(alpha, alpha)` coefficient per batch and a uniformly
/// drawn partner for every row.
pub fn mixup_pair<R: Rng + ?Sized>(
    inputs: &Array2<f64>,
    labels: &Array2<f64>,
    alpha: f64,
    rng: &mut R,
) -> (Array2<f64>, Array2<f64>) {
    let gamma = sample_beta(alpha, rng);
    let b = inputs.nrows();
    let partners: Vec<usize> = (0..b).map(|_| rng.random_range(0..b)).collect();
    mix_with(inputs, labels, &partners, gamma)
}

/// Per-dimension standard deviation of a feature matrix.
pub fn feature_std(features: &Array2<f64>) -> Array1<f64> {
    features.std_axis(Axis(0), 0.0)
}

/// Adds Gaussian jitter scaled by `scale * std[j]` to every column `j`.
pub fn jitter<R: Rng + ?Sized>(
    inputs: &Array2<f64>,
    std: &Array1<f64>,
    scale: f64,
    rng: &mut R,
) -> Array2<f64> {
    let mut out = inputs.clone();
    if scale == 0.0 {
        return out;
    }
    for mut row in out.rows_mut() {
        for (v, s) in row.iter_mut().zip(std) {
            let z: f64 = StandardNormal.sample(rng);
            *v += z * scale * s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_one_is_identity() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let (mx, my) = mix_with(&x, &y, &[1, 0], 1.0);
        assert_eq!(mx, x);
        assert_eq!(my, y);
    }

    #[test]
    fn half_mix_of_one_hot_labels() {
        let x = array![[0.0], [2.0]];
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let (mx, my) = mix_with(&x, &y, &[1, 0], 0.5);
        assert_eq!(my.row(0).to_vec(), vec![0.5, 0.5]);
        assert_eq!(mx[[0, 0]], 1.0);
    }

    #[test]
    fn mixed_labels_stay_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((8, 3), |(i, j)| (i * 3 + j) as f64);
        let y = crate::pmc::loss::one_hot(&[0, 1, 2, 0, 1, 2, 0, 1], 3);
        let (_, my) = mixup_pair(&x, &y, 4.0, &mut rng);
        for row in my.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn beta_mean_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_beta(4.0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn zero_jitter_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = array![[1.0, 2.0]];
        assert_eq!(jitter(&x, &array![1.0, 1.0], 0.0, &mut rng), x);
    }
}
