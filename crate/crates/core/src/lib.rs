//! Dual-modality graph classification.
//!
//! Each sample pairs a function call graph (static) with a process call graph
//! (dynamic). Node features come from the Local Degree Profile and the file's
//! byte entropy; two independent message-passing branches encode the graphs,
//! a learnable softmax gate fuses their pooled embeddings, and a fully
//! connected head classifies. Single-graph and merged-graph baselines, k-fold
//! cross-validation and rank-based group comparisons are included.

pub mod config;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod graph;
pub mod stats;
pub mod synthetic;
pub mod tensor;
pub mod training;

pub use config::{ArchKind, GraphType, JoinEmbeddings, ModelConfig, SchedulerKind, TrainConfig};
pub use error::{Error, Result};
pub use features::FeatureMode;
pub use graph::{Dataset, Graph, Label, SamplePair};
pub use tensor::Tensor2;

/// Seeded generator used everywhere randomness is needed.
pub type DetRng = rand_chacha::ChaCha8Rng;

/// Derives an independent stream seed from a base seed and a tag.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
