//! Multilayer-perceptron machinery: batched forward/backward with tangent
//! streams (exact input gradients and their parameter derivatives),
//! positional encoding, parameter storage and the optimizer stack.

mod encoding;
mod matrix;
mod mlp;
mod optim;
mod params;

use alloc::string::String;
use thiserror::Error;

pub use encoding::PositionalEncoding;
pub use matrix::Matrix;
pub use mlp::{Activation, LayerShape, Mlp, MlpCache, MlpConfig};
pub use optim::{lr_at, Adam, AdamConfig, ScheduleConfig};
pub use params::{ParamGroup, ParamSlice, ParameterStore};

#[allow(unused_imports)]
pub(crate) use matrix::{gemm, Strides};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("cache does not match the current parameters")]
    StaleCache,
    #[error("non-finite gradient at index {index} (slice `{slice}`)")]
    NonFinite { index: usize, slice: String },
    #[error("invalid network configuration: {0}")]
    InvalidConfig(&'static str),
}
