use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::model::PmcModel;

/// SGD with momentum, coupled weight decay and a per-epoch cosine-annealed
/// learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub velocity: PmcModel,
    pub epoch: usize,
    pub total_epochs: usize,
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

/// `lr0 * (1 + cos(pi * t / T)) / 2`.
pub fn cosine_annealing(base_lr: f64, epoch: usize, total_epochs: usize) -> f64 {
    let t = epoch as f64 / total_epochs.max(1) as f64;
    base_lr * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
}

impl OptimizerState {
    pub fn new(
        model: &PmcModel,
        base_lr: f64,
        momentum: f64,
        weight_decay: f64,
        total_epochs: usize,
    ) -> Self {
        Self {
            velocity: model.zeros_like(),
            epoch: 0,
            total_epochs,
            base_lr,
            momentum,
            weight_decay,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        cosine_annealing(self.base_lr, self.epoch, self.total_epochs)
    }

    pub fn step(&mut self, model: &mut PmcModel, grads: &PmcModel) {
        let lr = self.learning_rate();
        let (mu, wd) = (self.momentum, self.weight_decay);
        let params = model.tensors_mut();
        let vels = self.velocity.tensors_mut();
        let gs = grads.tensors();
        for ((mut p, mut v), g) in params.into_iter().zip(vels).zip(gs) {
            Zip::from(&mut p).and(&mut v).and(&g).for_each(|p, v, &g| {
                *v = mu * *v + g + wd * *p;
                *p -= lr * *v;
            });
        }
    }
}

/// Applies one optimizer step in place.
pub fn sgd_step(model: &mut PmcModel, grads: &PmcModel, opt: &mut OptimizerState) {
    opt.step(model, grads);
}
