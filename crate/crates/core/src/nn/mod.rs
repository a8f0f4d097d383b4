//! Dense GIN classifier with recorded activations, hand-written reverse-mode
//! gradients, Adam and the training loop. All arithmetic is `f64`.

mod adam;
mod backward;
mod forward;
pub mod loss;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward, grad_logit_wrt_layer, grad_loss_wrt_mask, Gradients};
pub(crate) use forward::aggregate_transpose;
pub use forward::{
    argmax, gin_forward, gin_forward_masked, logits_from_layer, ActivationTrace, LayerTrace,
};
pub use model::{Activation, Checkpoint, Dense, GinArchitecture, GinModel, Mlp, TensorRecord};
pub use train::{
    graph_loss_and_grad, predict, train, weighted_f1, EpochMetrics, TrainConfig, TrainOutcome,
};
