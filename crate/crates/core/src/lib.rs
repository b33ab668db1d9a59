//! Multi-robot shape assembly with prior-regularized multi-agent DDPG.
//!
//! - [`region`]: target-shape grids, occupancy, coverage (M1) and uniformity (M2).
//! - [`swarm`]: robot dynamics, sensing, observations and the episode lifecycle.
//! - [`behavior`]: prior-policy and reward specs and their evaluation.
//! - [`marl`]: MLPs with manual backprop, replay buffer and the trainer.

pub mod behavior;
pub mod geometry;
pub mod marl;
pub mod region;
pub mod swarm;

pub use behavior::{BehaviorSpec, LocalView};
pub use geometry::{Rect, Vec2};
pub use region::GridRegion;
pub use swarm::{EnvConfig, Observation, SwarmEnv};
