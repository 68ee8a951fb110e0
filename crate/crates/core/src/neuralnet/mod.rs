//! Small feed-forward network engine: ReLU MLPs with sigmoid or linear
//! heads, exact backpropagation for BCE/MSE, Adam, and a seeded mini-batch
//! training loop.

mod adam;
mod io;
mod mlp;
mod train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use io::{read_model, write_model, MODEL_FORMAT_VERSION};
pub use mlp::{
    bce_loss, init_params, loss, mse_loss, sigmoid, ForwardCache, Gradients, HiddenActivation,
    Layer, LossKind, MlpConfig, MlpParams, OutputActivation,
};
pub use train::{activations_chunked, evaluate_loss, holdout_split, train, TrainHistory, TrainOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network config: {0}")]
    Config(String),
    #[error("input width {got} does not match network width {expected}")]
    Width { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite network input")]
    NonFiniteInput,
    #[error("{loss:?} loss does not pair with a {activation:?} output")]
    LossMismatch { loss: LossKind, activation: OutputActivation },
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
