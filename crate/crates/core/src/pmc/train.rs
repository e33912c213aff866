use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{one_hot, total_loss, MiniBatch};
use super::mixup::{feature_std, jitter, mixup_pair};
use super::model::PmcModel;
use super::optim::OptimizerState;
use crate::config::TrainConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub batches: usize,
    pub cross_entropy: f64,
    pub consistency: f64,
}

/// Runs training passes over a fixed feature matrix. The consistency term
/// draws its batches from all samples, cycling through a shuffled order.
pub struct EpochTrainer<'a> {
    features: &'a Array2<f64>,
    config: &'a TrainConfig,
    std: Array1<f64>,
    fc_order: Vec<usize>,
    fc_pos: usize,
}

impl<'a> EpochTrainer<'a> {
    pub fn new(features: &'a Array2<f64>, config: &'a TrainConfig) -> Self {
        Self {
            features,
            config,
            std: feature_std(features),
            fc_order: Vec::new(),
            fc_pos: 0,
        }
    }

    fn consistency_rows<R: Rng + ?Sized>(&mut self, b: usize, rng: &mut R) -> Vec<usize> {
        let mut rows = Vec::with_capacity(b);
        while rows.len() < b {
            if self.fc_pos >= self.fc_order.len() {
                self.fc_order = (0..self.features.nrows()).collect();
                self.fc_order.shuffle(rng);
                self.fc_pos = 0;
            }
            let take = (b - rows.len()).min(self.fc_order.len() - self.fc_pos);
            rows.extend_from_slice(&self.fc_order[self.fc_pos..self.fc_pos + take]);
            self.fc_pos += take;
        }
        rows
    }

    /// One pass over `indices` (already balanced and shuffled) in order.
    pub fn train_epoch<R: Rng + ?Sized>(
        &mut self,
        model: &mut PmcModel,
        opt: &mut OptimizerState,
        indices: &[usize],
        labels: &[usize],
        rng: &mut R,
    ) -> Result<EpochLoss> {
        let cfg = self.config;
        let m = model.num_classes();
        let mut out = EpochLoss::default();
        for chunk in indices.chunks(cfg.batch_size) {
            let x = self.features.select(Axis(0), chunk);
            let hard: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let y = one_hot(&hard, m);
            let (inputs, labels_soft) = if cfg.mixup {
                mixup_pair(&x, &y, cfg.mixup_alpha, rng)
            } else {
                (x, y)
            };
            let views = if cfg.lambda_fc > 0.0 {
                let rows = self.consistency_rows(chunk.len(), rng);
                let base = self.features.select(Axis(0), &rows);
                let v1 = jitter(&base, &self.std, cfg.strong_jitter, rng);
                let v2 = jitter(&base, &self.std, cfg.weak_jitter, rng);
                Some((v1, v2))
            } else {
                None
            };
            let batch = MiniBatch {
                inputs,
                labels: labels_soft,
                views,
            };
            let loss = total_loss(
                model,
                &batch,
                cfg.lambda_fc,
                cfg.fc_distance,
                cfg.stop_gradient,
            )?;
            opt.step(model, &loss.grads);
            out.batches += 1;
            out.cross_entropy += loss.cross_entropy;
            out.consistency += loss.consistency.unwrap_or(0.0);
        }
        if out.batches > 0 {
            out.cross_entropy /= out.batches as f64;
            out.consistency /= out.batches as f64;
        }
        Ok(out)
    }
}
