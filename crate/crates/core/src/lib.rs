//! Sample selection and relabelling for learning with noisy labels.
//!
//! Each epoch relabels samples the classifier is confident about, keeps the
//! samples whose label agrees with a class-balanced vote of their nearest
//! neighbours in embedding space, and trains the classifier on that subset.

pub mod config;
pub mod dataset;
pub mod error;
pub mod noise;
pub mod pipeline;
pub mod pmc;
pub mod relabel;
pub mod selector;

pub use config::{FcDistance, SelectionMode, TrainConfig};
pub use dataset::{GroundTruth, LabelState, NoisyDataset, TrueLabel};
pub use error::{Result, SsrError};
pub use noise::{NoiseKind, NoiseSpec, SynthData, SynthSpec};
pub use pipeline::{
    compare_selection_modes, run_experiment, selection_metrics, ComparisonMode, EpochMetrics,
    ExperimentRecord, ModeRecord, SelectionMetrics,
};
pub use pmc::PmcModel;
pub use relabel::{relabel, relabel_metrics, PredictionMatrix, RelabelMetrics};
pub use selector::{NeighbourIndex, SelectionResult};
