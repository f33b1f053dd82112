//! Trainable score models, their optimizer, training loops and decoders.

mod adamw;
mod decode;
mod mlp;
mod train;

pub use adamw::{clip_grad_norm, AdamW, Scheduler};
pub use decode::{decode_composite, decode_separated};
pub use mlp::{Activations, HeadConfig, MlpConfig, Network};
pub use train::{
    objective_gradient, objective_value, train, train_augmented, train_l2d, train_separated, CompiledPolicy, Method, TrainConfig,
    TrainedPolicy,
};
