//! Preference prediction: a small feedforward network trained with Adam on
//! either a squared-error loss or a decision-quality loss routed through the
//! matching layer.

mod adam;
mod checkpoint;
mod loss;
mod mlp;
mod train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::{one_hot_encoding, Checkpoint, EncodedFeature, CHECKPOINT_FORMAT};
pub use loss::{
    loss_for, loss_owa_dq, loss_tu_dq, loss_two_stage, owa_upstream, DqConfig, EncodedPool,
    LossKind, LossOutput,
};
pub use mlp::{softmax, ForwardCache, MlpModel};
pub use train::{init_model, train, EpochRecord, TrainConfig, TrainHistory};
