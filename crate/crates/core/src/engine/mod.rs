//! Differentiable compute core: message-passing encoders, pooling, gated
//! fusion and the classification head, with hand-derived gradients.

mod checkpoint;
mod layers;
mod model;
mod ops;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use layers::{gated_fusion, global_pool, propagate, weights_per_layer};
pub use model::{GraphClassifier, PreparedGraph, PreparedSample};
pub use ops::{GraphOps, SparseOp};
pub use params::{
    branch_shapes, head_shapes, init_params, BranchParams, DenseParams, GateParams, ModelParams,
    NUM_CLASSES,
};
