//! The parametric classifier: an MLP encoder with a softmax head and
//! projector/predictor heads, trained by SGD with hand-derived gradients.

pub mod gradcheck;
pub mod loss;
pub mod mixup;
pub mod model;
pub mod optim;
pub mod sampling;
pub mod train;

pub use loss::{
    cross_entropy_grads, cross_entropy_loss, feature_consistency_loss, one_hot,
    per_sample_cross_entropy, total_loss, FcOutput, LossBreakdown, MiniBatch,
};
pub use mixup::{mixup_pair, sample_beta};
pub use model::{softmax, Forward, Linear, PmcModel};
pub use optim::{cosine_annealing, sgd_step, OptimizerState};
pub use sampling::oversample_balanced;
pub use train::{EpochLoss, EpochTrainer};
