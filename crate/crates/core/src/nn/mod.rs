//! Minimal differentiable kernel: GRU and LSTM cells with backpropagation
//! through time, ReLU/sigmoid feed-forward layers, MSE, Adagrad, finite
//! difference gradient checking and the binary checkpoint container.
//!
//! Everything runs in `f64`. Parameters are initialized from `f32` draws and
//! rounded to `f32` once training finishes, so checkpoints, which store
//! `f32`, reproduce models exactly.

mod adagrad;
pub mod checkpoint;
mod gradcheck;
mod gru;
mod lstm;
mod mlp;
mod tensor;

pub use adagrad::{adagrad_update, AdagradState, ADAGRAD_EPSILON};
pub use checkpoint::{Checkpoint, NamedArray, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{
    gradient_check, relative_error, GradCheckReport, TensorCheck, GRADCHECK_FLOOR, GRADCHECK_STEP, GRADCHECK_TOLERANCE,
};
pub use gru::{encode_sequence, gru_step, GruParams, GruStep};
pub use lstm::{lstm_encode, lstm_step, LstmParams, LstmStep};
pub use mlp::{mlp_forward, mse_loss, Dense, Mlp, MlpTrace};
pub use tensor::{axpy, dot, init_scale, matvec_add, matvec_t_add, outer_add, sigmoid, Parameters, Tensor};

pub(crate) use gru::{backward_sequence as gru_backward, check_ids, encode_traced as gru_traced};
pub(crate) use lstm::{backward_sequence as lstm_backward, encode_traced as lstm_traced};
