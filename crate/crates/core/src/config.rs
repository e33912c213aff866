use serde::{Deserialize, Serialize};

use crate::error::{Result, SsrError};

/// Distance used by the feature-consistency loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FcDistance {
    #[default]
    Cosine,
    L2,
}

/// How the clean subset is chosen each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Balanced neighbour voting with the consistency threshold `theta_s`.
    #[default]
    Consistency,
    /// Two-component mixture fitted to per-sample classifier losses.
    GmmLoss,
    /// Keep the `1 - tau` fraction with the smallest classifier loss.
    PredefinedLoss,
    /// Keep the `1 - tau` fraction with the highest neighbour-vote confidence.
    PredefinedConsistency,
    /// Reference run on the samples whose observed label is correct.
    /// Reads ground truth; only meaningful as an upper baseline.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub theta_s: f64,
    pub theta_r: f64,
    pub k_neighbours: usize,
    pub lambda_fc: f64,
    pub mixup: bool,
    pub mixup_alpha: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub fc_distance: FcDistance,
    pub stop_gradient: bool,
    /// Relabel from the previous epoch's working labels instead of the
    /// observed ones. Experimental.
    pub persistent_relabel: bool,
    /// Class-prior reweighting of neighbour votes plus minority oversampling.
    pub balanced: bool,
    pub hidden_dims: Vec<usize>,
    /// Width of the projector/predictor heads; `None` uses the embedding width.
    pub projection_dim: Option<usize>,
    /// Jitter scales relative to the per-dimension feature std.
    pub strong_jitter: f64,
    pub weak_jitter: f64,
    pub selection: SelectionMode,
    /// Assumed noise ratio for the predefined selection modes and the
    /// fallback of the loss-mixture mode.
    pub tau: f64,
    /// Record wall-clock phase timings. When off the timing columns are 0,
    /// which makes metric files byte-reproducible.
    pub record_timings: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            theta_s: 1.0,
            theta_r: 0.9,
            k_neighbours: 100,
            lambda_fc: 1.0,
            mixup: true,
            mixup_alpha: 0.4,
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            epochs: 30,
            batch_size: 128,
            seed: 0,
            fc_distance: FcDistance::Cosine,
            stop_gradient: true,
            persistent_relabel: false,
            balanced: true,
            hidden_dims: vec![64, 32],
            projection_dim: None,
            strong_jitter: 0.1,
            weak_jitter: 0.02,
            selection: SelectionMode::Consistency,
            tau: 0.5,
            record_timings: true,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(SsrError::Range(msg()))
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        check((0.0..=1.0).contains(&self.theta_s), || {
            format!("theta_s = {} not in [0, 1]", self.theta_s)
        })?;
        check(self.theta_r > 0.0 && self.theta_r <= 1.0, || {
            format!("theta_r = {} not in (0, 1]", self.theta_r)
        })?;
        check(self.k_neighbours >= 1, || "k_neighbours must be >= 1".into())?;
        check(self.lambda_fc >= 0.0 && self.lambda_fc.is_finite(), || {
            format!("lambda_fc = {} must be >= 0", self.lambda_fc)
        })?;
        check(self.mixup_alpha > 0.0 && self.mixup_alpha.is_finite(), || {
            format!("mixup_alpha = {} must be > 0", self.mixup_alpha)
        })?;
        check(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            || format!("learning_rate = {} must be > 0", self.learning_rate),
        )?;
        check((0.0..1.0).contains(&self.momentum), || {
            format!("momentum = {} not in [0, 1)", self.momentum)
        })?;
        check(
            self.weight_decay >= 0.0 && self.weight_decay.is_finite(),
            || format!("weight_decay = {} must be >= 0", self.weight_decay),
        )?;
        check(self.epochs >= 1, || "epochs must be >= 1".into())?;
        check(self.batch_size >= 1, || "batch_size must be >= 1".into())?;
        check(
            !self.hidden_dims.is_empty() && self.hidden_dims.iter().all(|&h| h >= 1),
            || "hidden_dims must be a non-empty list of positive widths".into(),
        )?;
        check(self.projection_dim != Some(0), || {
            "projection_dim must be >= 1".into()
        })?;
        check(self.strong_jitter >= 0.0 && self.weak_jitter >= 0.0, || {
            "jitter scales must be >= 0".into()
        })?;
        check((0.0..1.0).contains(&self.tau), || {
            format!("tau = {} not in [0, 1)", self.tau)
        })?;
        Ok(())
    }

    /// Width of the trunk output.
    pub fn embedding_dim(&self) -> usize {
        *self.hidden_dims.last().expect("validated non-empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!(c.theta_s, 1.0);
        assert_eq!(c.theta_r, 0.9);
        assert_eq!(c.k_neighbours, 100);
        assert_eq!(c.lambda_fc, 1.0);
    }

    #[test]
    fn out_of_range_thresholds_rejected() {
        let c = TrainConfig {
            theta_r: 1.5,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(SsrError::Range(_))));
        let c = TrainConfig {
            theta_r: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            theta_s: -0.1,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
