//! Training loop: shared actor and critic, one replay buffer for all robots,
//! prior actions recorded alongside every transition.

use log::{debug, info, warn};
use ndarray::Array2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mlp::{Adam, Mlp, OutputActivation};
use super::replay::{ReplayBuffer, ReplayEntry};
use super::update::{actor_update, critic_update, Optimizer, UpdateError};
use crate::behavior::{self, BehaviorSpec, LocalView, SpecError};
use crate::geometry::Vec2;
use crate::swarm::{EnvError, Observation, SwarmEnv};

/// Element type of the trained networks.
pub type Real = f32;

pub const CHECKPOINT_VERSION: u32 = 1;

/// RNG stream indices derived from one seed.
pub mod streams {
    pub const INIT: u64 = 0;
    pub const NOISE: u64 = 1;
    pub const REPLAY: u64 = 2;
    pub const ENV: u64 = 3;
    pub const EVAL: u64 = 4;
}

/// Independent ChaCha stream `stream` of `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    pub episode_length: usize,
    pub batch_size: usize,
    pub hidden_dim: usize,
    pub n_hidden_layers: usize,
    pub lr_critic: f64,
    pub lr_actor: f64,
    /// Fraction of the episodes over which exploration noise decays to zero.
    pub exploration_rate: f64,
    pub noise_scale: f64,
    pub gamma: f64,
    /// Weight of the pull toward the prior action.
    pub alpha: f64,
    pub tau: f64,
    pub seed: u64,
    pub buffer_capacity: usize,
    /// Environment steps between gradient steps.
    pub update_every: usize,
    /// Gradient steps taken at each update point.
    pub updates_per_step: usize,
    pub optimizer: OptimizerKind,
    /// Global gradient-norm clip; non-positive disables it.
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 3000,
            episode_length: 200,
            batch_size: 512,
            hidden_dim: 180,
            n_hidden_layers: 3,
            lr_critic: 1e-3,
            lr_actor: 1e-4,
            exploration_rate: 0.6,
            noise_scale: 0.1,
            gamma: 0.99,
            alpha: 1.0,
            tau: 0.01,
            seed: 0,
            buffer_capacity: 1_000_000,
            update_every: 1,
            updates_per_step: 1,
            optimizer: OptimizerKind::Adam,
            grad_clip: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::Config(msg.to_string()));
        if self.episode_length == 0 || self.batch_size == 0 || self.hidden_dim == 0 {
            return bad("episode_length, batch_size and hidden_dim must be positive");
        }
        if self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity must hold at least one batch");
        }
        if self.update_every == 0 || self.updates_per_step == 0 {
            return bad("update_every and updates_per_step must be positive");
        }
        if !(self.lr_critic > 0.0 && self.lr_actor > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be finite and non-negative");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.exploration_rate) || !(0.0..=1.0).contains(&self.noise_scale) {
            return bad("exploration_rate and noise_scale must lie in [0, 1]");
        }
        Ok(())
    }

    fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat_n(self.hidden_dim, self.n_hidden_layers));
        sizes.push(output);
        sizes
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("episode {episode}: {source}")]
    Update { episode: usize, source: UpdateError },
    #[error("parameters diverged during episode {episode}")]
    Diverged { episode: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Standard deviation of exploration noise at a given training progress.
pub fn noise_std(noise_scale: f64, exploration_rate: f64, progress: f64) -> f64 {
    if exploration_rate <= 0.0 {
        return 0.0;
    }
    noise_scale * (1.0 - progress / exploration_rate).max(0.0)
}

/// `clamp(a + ε)` with Gaussian `ε` whose std decays linearly to zero at
/// `progress == exploration_rate`. No randomness is drawn once the std is zero.
pub fn explore_action<R: Rng + ?Sized>(
    action: [Real; 2],
    exploration_rate: f64,
    noise_scale: f64,
    progress: f64,
    rng: &mut R,
) -> [Real; 2] {
    let std = noise_std(noise_scale, exploration_rate, progress);
    if std <= 0.0 {
        return action.map(|a| a.clamp(-1.0, 1.0));
    }
    let normal = Normal::new(0.0, std).expect("finite std");
    action.map(|a| (a as f64 + normal.sample(rng)).clamp(-1.0, 1.0) as Real)
}

/// Per-episode summary; also the training CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Reward averaged over robots and steps.
    pub mean_reward: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    /// Mean over the episode's gradient steps; `None` before updates start.
    pub actor_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    /// Colliding pairs summed over the episode's steps.
    pub collisions: usize,
}

/// Serialized networks plus enough context to resume or evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub episode: usize,
    pub obs_dim: usize,
    pub config: TrainConfig,
    pub actor: Mlp<Real>,
    pub critic: Mlp<Real>,
    pub target_actor: Mlp<Real>,
    pub target_critic: Mlp<Real>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| TrainError::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(TrainError::Checkpoint(format!(
                "version {} unsupported (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        if ck.actor.input_dim() != ck.obs_dim || ck.critic.input_dim() != ck.obs_dim + 2 {
            return Err(TrainError::Checkpoint("network shapes disagree with obs_dim".into()));
        }
        Ok(ck)
    }
}

/// Stacks observations into a network input matrix.
pub fn obs_matrix(obs: &[Observation]) -> Array2<Real> {
    let d = obs.first().map_or(0, Observation::len);
    let mut m = Array2::zeros((obs.len(), d));
    for (mut row, o) in m.rows_mut().into_iter().zip(obs) {
        for (dst, &src) in row.iter_mut().zip(o.as_slice()) {
            *dst = src as Real;
        }
    }
    m
}

/// Deterministic actions of one parameter snapshot for every robot.
pub fn policy_actions(actor: &Mlp<Real>, obs: &[Observation]) -> Vec<[Real; 2]> {
    if obs.is_empty() {
        return Vec::new();
    }
    let out = actor.forward(obs_matrix(obs).view()).expect("observation width matches actor");
    out.rows().into_iter().map(|r| [r[0], r[1]]).collect()
}

/// Prior action normalized into the actor's `[-1, 1]²` range.
pub fn prior_action(view: &LocalView, spec: &BehaviorSpec) -> Result<[Real; 2], SpecError> {
    let f = behavior::prior_policy(view, spec)?;
    let scale = view.f_max;
    Ok([
        (f.x / scale).clamp(-1.0, 1.0) as Real,
        (f.y / scale).clamp(-1.0, 1.0) as Real,
    ])
}

pub struct Trainer {
    cfg: TrainConfig,
    obs_dim: usize,
    actor: Mlp<Real>,
    critic: Mlp<Real>,
    target_actor: Mlp<Real>,
    target_critic: Mlp<Real>,
    actor_opt: Optimizer<Real>,
    critic_opt: Optimizer<Real>,
    buffer: ReplayBuffer,
    noise_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    episode: usize,
    env_steps: usize,
    grad_steps: usize,
    clipped_steps: usize,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, obs_dim: usize) -> Result<Self, TrainError> {
        cfg.validate()?;
        let mut init = rng_stream(cfg.seed, streams::INIT);
        let actor = Mlp::new(&cfg.layer_sizes(obs_dim, 2), OutputActivation::Tanh, &mut init);
        let critic = Mlp::new(&cfg.layer_sizes(obs_dim + 2, 1), OutputActivation::Identity, &mut init);
        Ok(Self::assemble(cfg, obs_dim, actor.clone(), critic.clone(), actor, critic, 0))
    }

    /// Restores networks from a checkpoint; optimizer state and replay start fresh.
    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self, TrainError> {
        ck.config.validate()?;
        Ok(Self::assemble(
            ck.config,
            ck.obs_dim,
            ck.actor,
            ck.critic,
            ck.target_actor,
            ck.target_critic,
            ck.episode,
        ))
    }

    fn assemble(
        cfg: TrainConfig,
        obs_dim: usize,
        actor: Mlp<Real>,
        critic: Mlp<Real>,
        target_actor: Mlp<Real>,
        target_critic: Mlp<Real>,
        episode: usize,
    ) -> Self {
        let make_opt = |net: &Mlp<Real>, lr: f64| match cfg.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd { lr: lr as Real },
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(net, lr as Real)),
        };
        let actor_opt = make_opt(&actor, cfg.lr_actor);
        let critic_opt = make_opt(&critic, cfg.lr_critic);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity, obs_dim);
        let noise_rng = rng_stream(cfg.seed, streams::NOISE);
        let replay_rng = rng_stream(cfg.seed, streams::REPLAY);
        Self {
            cfg,
            obs_dim,
            actor,
            critic,
            target_actor,
            target_critic,
            actor_opt,
            critic_opt,
            buffer,
            noise_rng,
            replay_rng,
            episode,
            env_steps: 0,
            grad_steps: 0,
            clipped_steps: 0,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn actor(&self) -> &Mlp<Real> {
        &self.actor
    }

    pub fn critic(&self) -> &Mlp<Real> {
        &self.critic
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn grad_steps(&self) -> usize {
        self.grad_steps
    }

    /// Gradient steps whose norm was clipped.
    pub fn clipped_steps(&self) -> usize {
        self.clipped_steps
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            episode: self.episode,
            obs_dim: self.obs_dim,
            config: self.cfg.clone(),
            actor: self.actor.clone(),
            critic: self.critic.clone(),
            target_actor: self.target_actor.clone(),
            target_critic: self.target_critic.clone(),
        }
    }

    fn progress(&self) -> f64 {
        if self.cfg.episodes == 0 {
            1.0
        } else {
            self.episode as f64 / self.cfg.episodes as f64
        }
    }

    /// Runs every remaining episode, calling `on_episode` after each.
    pub fn train<R: RngCore>(
        &mut self,
        env: &mut SwarmEnv<R>,
        prior: Option<&BehaviorSpec>,
        mut on_episode: impl FnMut(&EpisodeLog),
    ) -> Result<Vec<EpisodeLog>, TrainError> {
        let mut logs = Vec::new();
        while self.episode < self.cfg.episodes {
            let log = self.run_episode(env, prior)?;
            on_episode(&log);
            logs.push(log);
        }
        Ok(logs)
    }

    /// One exploration episode with learning. Without a prior the stored
    /// prior actions are zero and the regularizer weight is zero.
    pub fn run_episode<R: RngCore>(
        &mut self,
        env: &mut SwarmEnv<R>,
        prior: Option<&BehaviorSpec>,
    ) -> Result<EpisodeLog, TrainError> {
        let episode = self.episode;
        let progress = self.progress();
        let (n_hn, n_hc) = (env.config().n_hn, env.config().n_hc);
        let mut views = env.reset()?;
        let mut obs: Vec<Observation> = views.iter().map(|v| Observation::from_view(v, n_hn, n_hc)).collect();
        let alpha = if prior.is_some() { self.cfg.alpha } else { 0.0 };
        let f_max = env.config().f_max;

        let mut reward_sum = 0.0;
        let mut collisions = 0;
        let (mut actor_loss, mut critic_loss, mut n_updates) = (0.0, 0.0, 0usize);
        for _ in 0..self.cfg.episode_length {
            let greedy = policy_actions(&self.actor, &obs);
            let actions: Vec<[Real; 2]> = greedy
                .into_iter()
                .map(|a| {
                    explore_action(
                        a,
                        self.cfg.exploration_rate,
                        self.cfg.noise_scale,
                        progress,
                        &mut self.noise_rng,
                    )
                })
                .collect();
            let priors: Vec<[Real; 2]> = match prior {
                Some(spec) => views.iter().map(|v| prior_action(v, spec)).collect::<Result<_, _>>()?,
                None => vec![[0.0; 2]; views.len()],
            };
            let forces: Vec<Vec2> = actions
                .iter()
                .map(|a| Vec2::new(a[0] as f64 * f_max, a[1] as f64 * f_max))
                .collect();
            let step = env.step(&forces)?;
            reward_sum += step.rewards.iter().sum::<f64>();
            collisions += step.collisions.len();
            for (i, next) in step.observations.iter().enumerate() {
                self.buffer.push(ReplayEntry {
                    obs: obs[i].as_slice().iter().map(|&x| x as Real).collect(),
                    action: actions[i],
                    reward: step.rewards[i] as Real,
                    next_obs: next.as_slice().iter().map(|&x| x as Real).collect(),
                    // Episodes end on a time limit only, so every transition bootstraps.
                    done: false,
                    prior: priors[i],
                });
            }
            self.env_steps += 1;
            if self.buffer.len() >= self.cfg.batch_size && self.env_steps % self.cfg.update_every == 0 {
                for _ in 0..self.cfg.updates_per_step {
                    let (a, c) = self.gradient_step(alpha).map_err(|source| TrainError::Update { episode, source })?;
                    actor_loss += a;
                    critic_loss += c;
                    n_updates += 1;
                }
            }
            views = step.views;
            obs = step.observations;
        }
        if !(self.actor.is_finite() && self.critic.is_finite()) {
            return Err(TrainError::Diverged { episode });
        }
        let n_robot = env.swarm().len().max(1);
        let m2 = env.uniformity().unwrap_or_else(|e| {
            warn!("episode {episode}: uniformity undefined ({e})");
            f64::NAN
        });
        let log = EpisodeLog {
            episode,
            mean_reward: reward_sum / (n_robot * self.cfg.episode_length) as f64,
            m1: env.coverage(),
            m2,
            actor_loss: (n_updates > 0).then(|| actor_loss / n_updates as f64),
            critic_loss: (n_updates > 0).then(|| critic_loss / n_updates as f64),
            collisions,
        };
        debug!(
            "episode {episode} [{}]: reward {:.3} M1 {:.3} M2 {:.3}",
            env.shape_name(),
            log.mean_reward,
            log.m1,
            log.m2
        );
        if episode % 50 == 0 && self.clipped_steps > 0 {
            info!("{} of {} gradient steps clipped so far", self.clipped_steps, 2 * self.grad_steps);
        }
        self.episode += 1;
        Ok(log)
    }

    /// Critic step, actor step, then soft target updates. Returns (actor loss, critic loss).
    fn gradient_step(&mut self, alpha: f64) -> Result<(f64, f64), UpdateError> {
        let batch = self.buffer.sample::<Real, _>(self.cfg.batch_size, &mut self.replay_rng);
        let clip = (self.cfg.grad_clip > 0.0).then_some(self.cfg.grad_clip as Real);
        let c = critic_update(
            &mut self.critic,
            &mut self.critic_opt,
            &self.target_actor,
            &self.target_critic,
            &batch,
            self.cfg.gamma as Real,
            clip,
        )?;
        let a = actor_update(&mut self.actor, &mut self.actor_opt, &self.critic, &batch, alpha as Real, clip)?;
        let tau = self.cfg.tau as Real;
        self.target_critic.soft_update(&self.critic, tau)?;
        self.target_actor.soft_update(&self.actor, tau)?;
        self.grad_steps += 1;
        self.clipped_steps += usize::from(c.clipped) + usize::from(a.clipped);
        Ok((a.loss() as f64, c.td_loss as f64))
    }
}
