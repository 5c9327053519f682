//! Minimal from-scratch neural-network engine: dense 64-bit tensors, 2D
//! same-padding convolutions, dense layers, ReLU, exact backpropagation,
//! He initialization, and Adam.
//!
//! Everything is deterministic: forward and backward are sequential with a
//! fixed accumulation order, and initialization draws from a seeded stream.

mod adam;
mod layers;
mod network;
mod tensor;

pub use adam::{adam_update, AdamState};
pub use layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, relu_backward, relu_forward,
    ConvLayer, DenseLayer,
};
pub use network::{he_init, Activation, ForwardCache, Layer, LayerGrads, LayerOp, Network, NetworkGrads};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
}
