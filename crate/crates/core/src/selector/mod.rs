//! Clean-sample selection with a non-parametric neighbour classifier, and
//! the loss-based baselines it is compared against.

pub mod baseline;
pub mod gmm;
pub mod knn;
pub mod voting;

pub use baseline::{baseline_gmm_loss, baseline_small_loss_predefined};
pub use knn::{build_neighbour_index, cosine_similarity, NeighbourIndex};
pub use voting::{
    balance_distribution, consistency_measure, exact_consistency, label_at_peak,
    neighbour_label_counts, neighbour_label_distribution, select_by_consistency, select_clean,
    SelectionResult,
};
