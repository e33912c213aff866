use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Result, SsrError};

const MIN_NORM: f64 = 1e-12;

// Four interleaved partial sums, combined in a fixed order. Every
// similarity in the crate goes through this one function.
fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    match (a.as_slice(), b.as_slice()) {
        (Some(x), Some(y)) => dot_slices(x, y),
        _ => dot_slices(&a.to_vec(), &b.to_vec()),
    }
}

fn l2_norm(a: ArrayView1<f64>) -> f64 {
    dot(a, a).sqrt()
}

// Clamps to [-1, 1] and folds -0.0 into +0.0 so that ordering by
// `total_cmp` matches ordering by value.
fn finish_cosine(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0) + 0.0
}

/// Cosine similarity of two vectors, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SsrError::ShapeMismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na < MIN_NORM {
        return Err(SsrError::ZeroNormVector { index: 0 });
    }
    if nb < MIN_NORM {
        return Err(SsrError::ZeroNormVector { index: 1 });
    }
    Ok(finish_cosine(dot(a, b), na, nb))
}

/// Orders candidates by descending similarity, then ascending index.
pub fn neighbour_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Exhaustive top-K cosine neighbours of every sample, self excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourIndex {
    k: usize,
    ids: Vec<usize>,
    sims: Vec<f64>,
}

impl NeighbourIndex {
    /// Assembles an index from explicit rows. Each row must hold exactly `k`
    /// entries.
    pub fn from_rows(k: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut ids = Vec::with_capacity(rows.len() * k);
        let mut sims = Vec::with_capacity(rows.len() * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(SsrError::ShapeMismatch(format!(
                    "neighbour row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            for (id, s) in row {
                ids.push(id);
                sims.push(s);
            }
        }
        Ok(Self { k, ids, sims })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.ids[i * self.k..(i + 1) * self.k]
    }

    pub fn similarities(&self, i: usize) -> &[f64] {
        &self.sims[i * self.k..(i + 1) * self.k]
    }

    pub fn ids_matrix(&self) -> Array2<usize> {
        Array2::from_shape_vec((self.len(), self.k), self.ids.clone()).expect("rectangular")
    }
}

/// Builds the top-`k` cosine neighbour lists for every row of `features`.
///
/// Rows are processed in parallel; each row's similarities are accumulated
/// in a fixed order, so the result does not depend on the worker count.
pub fn build_neighbour_index(features: &Array2<f64>, k: usize) -> Result<NeighbourIndex> {
    let n = features.nrows();
    if k == 0 || k >= n {
        return Err(SsrError::KTooLarge {
            k,
            available: n.saturating_sub(1),
        });
    }
    let features = features.as_standard_layout();
    let norms: Vec<f64> = features.rows().into_iter().map(l2_norm).collect();
    if let Some(index) = norms.iter().position(|&v| v < MIN_NORM) {
        return Err(SsrError::ZeroNormVector { index });
    }
    let d = features.ncols();
    let flat = features.as_slice().expect("standard layout");

    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fi = &flat[i * d..(i + 1) * d];
            let mut cand: Vec<(f64, usize)> = flat
                .chunks_exact(d)
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, fj)| (finish_cosine(dot_slices(fi, fj), norms[i], norms[j]), j))
                .collect();
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, neighbour_order);
                cand.truncate(k);
            }
            cand.sort_unstable_by(neighbour_order);
            cand.into_iter().map(|(s, j)| (j, s)).unzip()
        })
        .collect();

    let mut ids = Vec::with_capacity(n * k);
    let mut sims = Vec::with_capacity(n * k);
    for (r_ids, r_sims) in rows {
        ids.extend(r_ids);
        sims.extend(r_sims);
    }
    Ok(NeighbourIndex { k, ids, sims })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cosine_identity_and_orthogonality() {
        let a = array![3.0, 4.0];
        assert_eq!(cosine_similarity(a.view(), a.view()).unwrap(), 1.0);
        let (x, y) = (array![1.0, 0.0], array![0.0, 1.0]);
        assert_eq!(cosine_similarity(x.view(), y.view()).unwrap(), 0.0);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cosine_diagonal() {
        let (x, y) = (array![1.0, 0.0], array![1.0, 1.0]);
        let s = cosine_similarity(x.view(), y.view()).unwrap();
        assert!((s - 0.70710678).abs() < 1e-8);
    }

    #[test]
    fn cosine_zero_norm() {
        let (x, y) = (array![0.0, 0.0], array![1.0, 1.0]);
        assert_eq!(
            cosine_similarity(x.view(), y.view()),
            Err(SsrError::ZeroNormVector { index: 0 })
        );
    }

    #[test]
    fn identical_vectors_tie_break_by_index() {
        let f = array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]];
        let idx = build_neighbour_index(&f, 2).unwrap();
        assert_eq!(idx.neighbours(0), &[1, 2]);
        assert_eq!(idx.neighbours(1), &[0, 2]);
        assert_eq!(idx.neighbours(2), &[0, 1]);
    }

    #[test]
    fn orthogonal_basis_picks_lowest_other_index() {
        let f = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let idx = build_neighbour_index(&f, 1).unwrap();
        assert_eq!(idx.neighbours(0), &[1]);
        assert_eq!(idx.neighbours(1), &[0]);
        assert_eq!(idx.neighbours(2), &[0]);
        assert!((0..3).all(|i| idx.similarities(i)[0] == 0.0));
    }

    #[test]
    fn negative_zero_similarity_ties_with_positive_zero() {
        // row 0 vs row 1 gives -0.0 before normalisation
        let f = array![[-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let idx = build_neighbour_index(&f, 2).unwrap();
        assert_eq!(idx.neighbours(0), &[1, 2]);
    }

    #[test]
    fn k_must_be_below_n() {
        let f = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(
            build_neighbour_index(&f, 2),
            Err(SsrError::KTooLarge { k: 2, available: 1 })
        );
        assert!(build_neighbour_index(&f, 0).is_err());
    }

    #[test]
    fn zero_row_rejected() {
        let f = array![[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]];
        assert_eq!(
            build_neighbour_index(&f, 1),
            Err(SsrError::ZeroNormVector { index: 1 })
        );
    }
}
