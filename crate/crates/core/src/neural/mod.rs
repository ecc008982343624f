//! Small fully connected networks with hand-written backpropagation and the
//! one-pass and scalable actor-critic layouts built from them.

mod checkpoint;
pub mod gradcheck;
mod mlp;
mod policy;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use mlp::{relu, Dense, Mlp, MlpCache};
pub use policy::{
    entropy, greedy_action, masked_softmax, sample_action, stack_states, A2cBatch, A2cGrads,
    A2cLoss, ActorCritic, Architecture, LossWeights, PolicyOutput, FEATURES, MASK_PENALTY,
};
