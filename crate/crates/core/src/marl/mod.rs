//! Shared-parameter MADDPG with a decentralized critic and prior-policy regularization.

pub mod mlp;
pub mod replay;
pub mod trainer;
pub mod update;

pub use mlp::{Adam, Mlp, MlpGrads, OutputActivation, Scalar};
pub use replay::{Batch, ReplayBuffer, ReplayEntry};
pub use trainer::{Checkpoint, EpisodeLog, TrainConfig, TrainError, Trainer};
pub use update::{actor_update, critic_update, Optimizer, UpdateError};
