//! Central finite differences for checking analytic gradients.

use ndarray::{Array2, Zip};

use super::model::PmcModel;

/// Gradient of `loss` at `model` by central differences, one parameter at a
/// time.
pub fn numeric_gradient(model: &PmcModel, step: f64, loss: impl Fn(&PmcModel) -> f64) -> PmcModel {
    let mut grads = model.zeros_like();
    let mut probe = model.clone();
    let sizes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    for (t, &len) in sizes.iter().enumerate() {
        for e in 0..len {
            let original = nth(&mut probe, t, e, None);
            nth(&mut probe, t, e, Some(original + step));
            let up = loss(&probe);
            nth(&mut probe, t, e, Some(original - step));
            let down = loss(&probe);
            nth(&mut probe, t, e, Some(original));
            nth(&mut grads, t, e, Some((up - down) / (2.0 * step)));
        }
    }
    grads
}

// Reads element `e` of tensor `t`, optionally overwriting it first.
fn nth(model: &mut PmcModel, t: usize, e: usize, set: Option<f64>) -> f64 {
    let mut tensors = model.tensors_mut();
    let slot = tensors[t].iter_mut().nth(e).expect("element in range");
    if let Some(v) = set {
        *slot = v;
    }
    *slot
}

/// Gradient of `loss` with respect to every entry of `x`.
pub fn numeric_input_gradient(x: &Array2<f64>, step: f64, loss: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut g = Array2::zeros(x.raw_dim());
    let mut probe = x.clone();
    for idx in ndarray::indices(x.raw_dim()) {
        let original = probe[idx];
        probe[idx] = original + step;
        let up = loss(&probe);
        probe[idx] = original - step;
        let down = loss(&probe);
        probe[idx] = original;
        g[idx] = (up - down) / (2.0 * step);
    }
    g
}

/// `|a - b| / max(|a|, |b|)` in the Frobenius norm; 0 when both are
/// negligible.
pub fn relative_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut diff = 0.0;
    let (mut na, mut nb) = (0.0, 0.0);
    Zip::from(a).and(b).for_each(|&x, &y| {
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    });
    let scale = na.sqrt().max(nb.sqrt());
    if scale < 1e-10 {
        0.0
    } else {
        diff.sqrt() / scale
    }
}

/// Largest per-tensor [`relative_error`] between two gradient buffers.
pub fn max_relative_error(a: &PmcModel, b: &PmcModel) -> f64 {
    a.tensors()
        .iter()
        .zip(b.tensors())
        .map(|(x, y)| {
            let x = x.to_shape((x.len(), 1)).expect("flatten").to_owned();
            let y = y.to_shape((y.len(), 1)).expect("flatten").to_owned();
            relative_error(&x, &y)
        })
        .fold(0.0, f64::max)
}
