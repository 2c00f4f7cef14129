//! Small multilayer perceptrons with hand-written backpropagation, the two
//! weighted losses of the adversarial objective, learning-rate schedules and
//! the simultaneous min/max update.

mod checkpoint;
mod loss;
mod mlp;
mod schedule;
mod step;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use loss::{sigmoid, weighted_cross_entropy, weighted_domain_loss, CrossEntropy, DomainLoss, PROB_FLOOR};
pub use mlp::{Activation, ForwardCache, Layer, MlpGradients, MlpModel};
pub use schedule::{lr_classifier, lr_discriminator, ScheduleState};
pub use step::{
    adversarial_step, objective_gradients, objective_losses, AdversarialNets, Architecture, Momentum,
    ObjectiveGradients, StepBatch, StepOptions, StepReport,
};
