use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ssr_core::selector::knn::{build_neighbour_index, cosine_similarity};

// Full sort of every other sample by (similarity desc, index asc).
fn oracle(features: &Array2<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = features.nrows();
    (0..n)
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (cosine_similarity(features.row(i), features.row(j)).unwrap(), j))
                .collect();
            all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

fn gaussian(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, d), || rng.sample(StandardNormal))
}

fn ids(features: &Array2<f64>, k: usize) -> Vec<Vec<usize>> {
    let idx = build_neighbour_index(features, k).unwrap();
    (0..idx.len()).map(|i| idx.neighbours(i).to_vec()).collect()
}

#[test]
fn matches_full_sort_on_gaussian_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = gaussian(200, 8, &mut rng);
    assert_eq!(ids(&f, 10), oracle(&f, 10));
}

#[test]
fn matches_full_sort_with_duplicated_rows() {
    // exact ties everywhere: three copies of each of 20 points
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let base = gaussian(20, 4, &mut rng);
    let f = Array2::from_shape_fn((60, 4), |(i, j)| base[[i % 20, j]]);
    for k in [1, 2, 5, 20] {
        assert_eq!(ids(&f, k), oracle(&f, k), "k = {k}");
    }
}

#[test]
fn similarities_are_sorted_and_self_excluded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = gaussian(50, 5, &mut rng);
    let idx = build_neighbour_index(&f, 7).unwrap();
    for i in 0..50 {
        assert!(!idx.neighbours(i).contains(&i));
        let s = idx.similarities(i);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        for (&j, &sij) in idx.neighbours(i).iter().zip(s) {
            assert_eq!(sij, cosine_similarity(f.row(i), f.row(j)).unwrap());
        }
    }
}

#[test]
fn k_bounds() {
    let f = Array2::from_shape_fn((5, 2), |(i, j)| (i + j + 1) as f64);
    assert!(build_neighbour_index(&f, 0).is_err());
    assert!(build_neighbour_index(&f, 5).is_err());
    assert!(build_neighbour_index(&f, 4).is_ok());
}

fn dataset() -> impl Strategy<Value = (Array2<f64>, usize)> {
    (2usize..40, 1usize..8).prop_flat_map(|(n, d)| {
        (
            proptest::collection::vec(-3.0f64..3.0, n * d)
                .prop_filter("non-zero rows", move |v| v.chunks(d).all(|r| r.iter().any(|x| x.abs() > 1e-3)))
                .prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap()),
            1..n,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_equivalence((f, k) in dataset()) {
        prop_assert_eq!(ids(&f, k), oracle(&f, k));
    }

    // Powers of two rescale exactly, so even tied similarities stay tied.
    #[test]
    fn positive_row_scaling_keeps_ids((f, k) in dataset(), exps in proptest::collection::vec(-6i32..6, 40)) {
        let mut g = f.clone();
        for (mut row, e) in g.rows_mut().into_iter().zip(exps) {
            row *= 2f64.powi(e);
        }
        prop_assert_eq!(ids(&f, k), ids(&g, k));
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(a in proptest::collection::vec(-5.0f64..5.0, 6), b in proptest::collection::vec(-5.0f64..5.0, 6)) {
        let (a, b) = (ndarray::Array1::from(a), ndarray::Array1::from(b));
        if let (Ok(x), Ok(y)) = (cosine_similarity(a.view(), b.view()), cosine_similarity(b.view(), a.view())) {
            prop_assert_eq!(x, y);
            prop_assert!((-1.0..=1.0).contains(&x));
        }
    }
}
