//! Synthetic datasets, label-noise injection and the `SSRD` file format.

pub mod inject;
pub mod ssrd;
pub mod synth;

pub use inject::{
    apply_noise, cyclic_pair_map, inject_asymmetric, inject_combined, inject_symmetric,
    inject_symmetric_with, ratio_count, NoiseKind, NoiseSpec,
};
pub use ssrd::{load_embeddings, load_pool, write_embeddings, write_pool, SsrdFile};
pub use synth::{make_gaussian_dataset, SynthData, SynthSpec, RNG_ALGORITHM};
