//! Dense tensors, a recorded reverse-mode graph, Adam and checkpoints.

pub mod adam;
pub mod check;
pub mod checkpoint;
mod graph;
mod mask;
mod params;
mod tensor;

pub use adam::Adam;
pub use graph::{Graph, Var, LAYER_NORM_EPS};
pub use mask::{AttentionMask, Segments};
pub use params::{ParamId, ParamStore, Parameter};
pub use tensor::{matmul, Real, Tensor};
