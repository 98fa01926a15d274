//! A deliberately small neural toolkit: one-hidden-layer ReLU perceptrons
//! with hand-derived backpropagation, the Adam optimizer, Polyak target
//! updates, Gumbel-Softmax sampling and a flat binary checkpoint format.

mod adam;
mod checkpoint;
mod error;
mod grads;
pub mod gumbel;
mod mlp;

pub use adam::{adam_step, soft_update, AdamState};
pub use checkpoint::{CHECKPOINT_MAGIC, RELU_TAG};
pub use error::NnError;
pub use grads::Grads;
pub use gumbel::{argmax, gumbel_softmax_sample, onehot, onehot_argmax, softmax, softmax_backward};
pub use mlp::{ForwardCache, Mlp};

pub type Result<T> = std::result::Result<T, NnError>;
