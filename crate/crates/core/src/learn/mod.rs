//! From-scratch deep Q-learning: a dense multilayer perceptron with
//! backpropagation and RMSProp updates, a replay ring, an eval/target
//! network pair, and binary checkpoints. No external numerics, so training
//! is bit-reproducible.

mod agent;
mod checkpoint;
mod net;
mod replay;

pub use agent::{DqnAgent, DqnConfig};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, CheckpointMeta};
pub use net::{gradient_check, greedy_action, td_target, Activation, QNetwork};
pub use replay::{ReplayMemory, Transition};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("input has length {got} but the network expects {expected}")]
    InputShape { got: usize, expected: usize },
    #[error("valid action count {valid} is outside 1..={actions}")]
    ActionRange { valid: usize, actions: usize },
    #[error("invalid learner config: {0}")]
    Config(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
