use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsrError};

/// Affine layer `y = x W + b` with `W` stored as `in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((input, output)),
            bias: Array1::zeros(output),
        }
    }

    /// Gaussian weights with standard deviation `sqrt(gain / input)`, zero bias.
    pub fn random<R: Rng + ?Sized>(input: usize, output: usize, gain: f64, rng: &mut R) -> Self {
        let std = (gain / input as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((input, output), || {
            let z: f64 = StandardNormal.sample(rng);
            z * std
        });
        Self {
            weight,
            bias: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the layer input.
    pub fn backward(&self, x: &Array2<f64>, grad_out: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        grad.weight += &x.t().dot(grad_out);
        grad.bias += &grad_out.sum_axis(Axis(0));
        grad_out.dot(&self.weight.t())
    }
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Trunk activations kept for backpropagation.
#[derive(Debug, Clone)]
pub struct TrunkCache {
    // input to every trunk layer; inputs[0] is the batch itself
    inputs: Vec<Array2<f64>>,
    // pre-activation output of every layer but the last
    pre: Vec<Array2<f64>>,
}

/// Encoder MLP with a softmax head and projector/predictor heads.
///
/// Hidden trunk layers use a rectifier; the last trunk layer is affine and
/// its output is the embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmcModel {
    pub trunk: Vec<Linear>,
    pub head: Linear,
    pub projector: Linear,
    pub predictor: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub logits: Array2<f64>,
    pub probs: Array2<f64>,
    pub embeddings: Array2<f64>,
}

/// Row-wise softmax with max subtraction.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

impl PmcModel {
    /// Randomly initialised model: `input -> hidden[0] -> ... -> hidden[last]`
    /// trunk, `num_classes`-way head, and `projection`-wide heads.
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        num_classes: usize,
        projection: usize,
        rng: &mut R,
    ) -> Self {
        let mut trunk = Vec::with_capacity(hidden.len());
        let mut width = input;
        for (i, &h) in hidden.iter().enumerate() {
            let gain = if i + 1 < hidden.len() { 2.0 } else { 1.0 };
            trunk.push(Linear::random(width, h, gain, rng));
            width = h;
        }
        let head = Linear::random(width, num_classes, 1.0, rng);
        let projector = Linear::random(width, projection, 1.0, rng);
        let predictor = Linear::random(projection, projection, 1.0, rng);
        Self {
            trunk,
            head,
            projector,
            predictor,
        }
    }

    /// A gradient buffer: same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let z = |l: &Linear| Linear::zeros(l.input_dim(), l.output_dim());
        Self {
            trunk: self.trunk.iter().map(z).collect(),
            head: z(&self.head),
            projector: z(&self.projector),
            predictor: z(&self.predictor),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.trunk[0].input_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.head.input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.head.output_dim()
    }

    fn layers(&self) -> impl Iterator<Item = &Linear> {
        self.trunk
            .iter()
            .chain([&self.head, &self.projector, &self.predictor])
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Linear> {
        self.trunk
            .iter_mut()
            .chain([&mut self.head, &mut self.projector, &mut self.predictor])
    }

    /// Every parameter tensor in a fixed order.
    pub fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        self.layers()
            .flat_map(|l| [l.weight.view().into_dyn(), l.bias.view().into_dyn()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        self.layers_mut()
            .flat_map(|l| [l.weight.view_mut().into_dyn(), l.bias.view_mut().into_dyn()])
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &PmcModel, scale: f64) {
        for (mut a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.scaled_add(scale, &b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn check_input(&self, inputs: &Array2<f64>) -> Result<()> {
        if inputs.ncols() != self.input_dim() {
            return Err(SsrError::ShapeMismatch(format!(
                "model expects {} input features, got {}",
                self.input_dim(),
                inputs.ncols()
            )));
        }
        if let Some(row) = inputs
            .rows()
            .into_iter()
            .position(|r| r.iter().any(|v| !v.is_finite()))
        {
            return Err(SsrError::NonFiniteInput { row });
        }
        Ok(())
    }

    pub fn trunk_forward(&self, inputs: &Array2<f64>) -> (Array2<f64>, TrunkCache) {
        let mut cache = TrunkCache {
            inputs: Vec::with_capacity(self.trunk.len()),
            pre: Vec::with_capacity(self.trunk.len().saturating_sub(1)),
        };
        let mut x = inputs.clone();
        let last = self.trunk.len() - 1;
        for (i, layer) in self.trunk.iter().enumerate() {
            let z = layer.forward(&x);
            cache.inputs.push(x);
            if i < last {
                x = relu(&z);
                cache.pre.push(z);
            } else {
                x = z;
            }
        }
        (x, cache)
    }

    /// Backpropagates `grad_emb` through the trunk, accumulating into
    /// `grads.trunk`; returns the gradient with respect to the trunk input.
    pub fn trunk_backward(
        &self,
        cache: &TrunkCache,
        grad_emb: &Array2<f64>,
        grads: &mut PmcModel,
    ) -> Array2<f64> {
        let mut g = grad_emb.clone();
        for i in (0..self.trunk.len()).rev() {
            if i < self.trunk.len() - 1 {
                ndarray::Zip::from(&mut g)
                    .and(&cache.pre[i])
                    .for_each(|gv, &z| {
                        if z <= 0.0 {
                            *gv = 0.0
                        }
                    });
            }
            g = self.trunk[i].backward(&cache.inputs[i], &g, &mut grads.trunk[i]);
        }
        g
    }

    pub fn forward(&self, inputs: &Array2<f64>) -> Result<Forward> {
        self.check_input(inputs)?;
        let (embeddings, _) = self.trunk_forward(inputs);
        let logits = self.head.forward(&embeddings);
        let probs = softmax(&logits);
        Ok(Forward {
            logits,
            probs,
            embeddings,
        })
    }
}
