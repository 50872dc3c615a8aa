//! Small deterministic 1-D convolutional network engine.

pub mod arch;
pub mod checkpoint;
pub mod network;
pub mod optim;
pub mod scalar;
pub mod tensor;

pub use arch::{
    build_architecture, build_architecture_with, count_params, Activation, ArchitectureDims, ArchitectureKind,
    LayerSpec, NetworkSpec, Padding, Shape,
};
pub use checkpoint::Checkpoint;
pub use network::{mse, Gradients, LayerParams, Network, Trace};
pub use optim::{Algorithm, Optimizer, OptimizerConfig};
pub use scalar::Scalar;
pub use tensor::Tensor;
