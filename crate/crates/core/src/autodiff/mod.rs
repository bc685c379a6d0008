//! Dense `channels x time` tensors with a tape-based reverse-mode differentiator
//! and the handful of layers and losses the detector and ranking networks use.

mod graph;
mod kernels;
mod optim;
mod param;
mod tensor;

pub use graph::{binary_cross_entropy, sigmoid_scalar, smooth_l1, ComputeGraph, NodeId, BCE_CLAMP};
pub use optim::{sgd_step, Optimizer, OptimizerKind};
pub use param::{Gradients, ParamId, ParamSet, ParamTensor};
pub use tensor::Tensor2D;
