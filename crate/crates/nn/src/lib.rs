//! A minimal neural-network engine for 1D signals and feature maps.
//!
//! Everything is `f64`. Batches are `(batch, channels, length)` for
//! convolutional and recurrent layers and `(batch, features)` after
//! `Flatten`, `Dense` or `Lstm`.

pub mod checkpoint;
mod error;
pub mod gradcheck;
pub mod layers;
pub mod loss;
mod model;
pub mod optim;
pub mod spec;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use error::{NnError, Result};
pub use gradcheck::{grad_check, GradCheckReport};
pub use layers::Layer;
pub use loss::{cross_entropy, softmax_cross_entropy_grad};
pub use model::{xavier_init, Model};
pub use optim::Adam;
pub use spec::{CnnConfig, LayerSpec, ModelPreset, ModelSpec, PresetConfig};
pub use tensor::Tensor;

/// RNG used for initialization and dropout masks.
pub type Rng = rand_chacha::ChaCha8Rng;
