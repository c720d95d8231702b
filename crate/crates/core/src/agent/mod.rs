//! Value network, replay memory, optimizer and the DQN training loop.

mod checkpoint;
mod dqn;
mod network;
mod replay;
mod rmsprop;

use std::path::PathBuf;

use thiserror::Error;

use crate::env::EnvError;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointLayer, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use dqn::{
    episode_start, loss_and_gradient, select_action, sync_target, td_targets, train, train_step, AgentHyperparams,
    GreedyPolicy, Learner, TrainingArtifacts, TrainingLogRow,
};
pub use network::{argmax, Architecture, Dense, ForwardCache, QNetwork, LAYER_NAMES};
pub use replay::{ReplayBuffer, Transition};
pub use rmsprop::{clip_global_norm, RmsProp};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),
    #[error("replay buffer holds {have} transitions, batch needs {need}")]
    BufferUnderflow { have: usize, need: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid hyperparameter `{name}`: {reason}")]
    InvalidHyperparameter { name: &'static str, reason: String },
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Env(#[from] EnvError),
}
