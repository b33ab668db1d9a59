//! Actor and critic gradient steps for DDPG with a decentralized critic
//! `Q(o_i, a_i)` and a pull toward the prior action.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use thiserror::Error;

use super::mlp::{Adam, Mlp, MlpGrads, Scalar, ShapeError};
use super::replay::Batch;

#[derive(Debug, Error)]
pub enum UpdateError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite {which} loss: {value}")]
    NonFinite { which: &'static str, value: f64 },
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Parameter update rule.
pub enum Optimizer<F> {
    Sgd { lr: F },
    Adam(Adam<F>),
}

impl<F: Scalar> Optimizer<F> {
    pub fn apply(&mut self, net: &mut Mlp<F>, grads: &MlpGrads<F>) {
        match self {
            Optimizer::Sgd { lr } => net.sgd_step(grads, *lr),
            Optimizer::Adam(adam) => adam.apply(net, grads),
        }
    }
}

/// Actor objective terms averaged over the batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActorStats<F> {
    /// `mean[Q(o, μ(o)) - α ||μ(o) - a_prior||²]`, the quantity being maximized.
    pub objective: F,
    pub mean_q: F,
    /// `mean ||μ(o) - a_prior||²`
    pub imitation: F,
    pub clipped: bool,
}

impl<F: Scalar> ActorStats<F> {
    /// Loss that the step minimizes.
    pub fn loss(&self) -> F {
        -self.objective
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticStats<F> {
    pub td_loss: F,
    pub clipped: bool,
}

pub(crate) fn concat_obs_action<F: Scalar>(obs: ArrayView2<F>, actions: ArrayView2<F>) -> Array2<F> {
    concatenate(Axis(1), &[obs, actions]).expect("row counts match")
}

/// Value of the regularized actor objective and its gradient with respect to
/// the actor parameters (the gradient of the loss, i.e. of `-objective`).
pub fn actor_loss_and_grads<F: Scalar>(
    actor: &Mlp<F>,
    critic: &Mlp<F>,
    obs: ArrayView2<F>,
    prior: ArrayView2<F>,
    alpha: F,
) -> Result<(ActorStats<F>, MlpGrads<F>), UpdateError> {
    let n = obs.nrows();
    if n == 0 {
        return Err(UpdateError::EmptyBatch);
    }
    let nf = F::lit(n as f64);
    let a_cache = actor.forward_cached(obs)?;
    let actions = &a_cache.output;
    let c_in = concat_obs_action(obs, actions.view());
    let c_cache = critic.forward_cached(c_in.view())?;
    let q = c_cache.output.column(0);
    let mean_q = q.sum() / nf;
    let diff = actions - &prior;
    let imitation = diff.iter().fold(F::zero(), |acc, &d| acc + d * d) / nf;
    let objective = mean_q - alpha * imitation;

    // ∂loss/∂q = -1/n for every row.
    let dq = Array2::from_elem((n, 1), -F::one() / nf);
    let d_in = critic.input_grad(&c_cache, &dq);
    let act_dim = actions.ncols();
    let obs_dim = obs.ncols();
    let mut d_action = d_in.slice(s![.., obs_dim..obs_dim + act_dim]).to_owned();
    d_action.scaled_add(F::lit(2.0) * alpha / nf, &diff);
    let (grads, _) = actor.backward(&a_cache, &d_action);
    Ok((
        ActorStats {
            objective,
            mean_q,
            imitation,
            clipped: false,
        },
        grads,
    ))
}

/// One gradient step on the actor; the critic is read only.
pub fn actor_update<F: Scalar>(
    actor: &mut Mlp<F>,
    opt: &mut Optimizer<F>,
    critic: &Mlp<F>,
    batch: &Batch<F>,
    alpha: F,
    max_grad_norm: Option<F>,
) -> Result<ActorStats<F>, UpdateError> {
    let (mut stats, mut grads) = actor_loss_and_grads(actor, critic, batch.obs.view(), batch.prior.view(), alpha)?;
    if !stats.objective.is_finite() {
        return Err(UpdateError::NonFinite {
            which: "actor",
            value: stats.objective.to_f64().unwrap_or(f64::NAN),
        });
    }
    if let Some(m) = max_grad_norm {
        stats.clipped = grads.clip_global_norm(m);
    }
    opt.apply(actor, &grads);
    Ok(stats)
}

/// Bootstrapped TD target `r + γ (1 - done) Q'(o', μ'(o'))`.
pub fn td_targets<F: Scalar>(
    target_actor: &Mlp<F>,
    target_critic: &Mlp<F>,
    batch: &Batch<F>,
    gamma: F,
) -> Result<Array1<F>, UpdateError> {
    let next_a = target_actor.forward(batch.next_obs.view())?;
    let next_in = concat_obs_action(batch.next_obs.view(), next_a.view());
    let next_q = target_critic.forward(next_in.view())?;
    let mut y = batch.rewards.clone();
    for ((y, &d), &q) in y.iter_mut().zip(&batch.done).zip(next_q.column(0)) {
        *y += gamma * (F::one() - d) * q;
    }
    Ok(y)
}

/// Mean squared TD error and its parameter gradient for fixed targets `y`.
pub fn critic_loss_and_grads<F: Scalar>(
    critic: &Mlp<F>,
    obs: ArrayView2<F>,
    actions: ArrayView2<F>,
    y: &Array1<F>,
) -> Result<(F, MlpGrads<F>), UpdateError> {
    let n = obs.nrows();
    if n == 0 {
        return Err(UpdateError::EmptyBatch);
    }
    let nf = F::lit(n as f64);
    let input = concat_obs_action(obs, actions);
    let cache = critic.forward_cached(input.view())?;
    let mut err = Array2::zeros((n, 1));
    let mut loss = F::zero();
    for (k, (&q, &t)) in cache.output.column(0).iter().zip(y).enumerate() {
        let e = q - t;
        loss += e * e;
        err[[k, 0]] = F::lit(2.0) * e / nf;
    }
    let (grads, _) = critic.backward(&cache, &err);
    Ok((loss / nf, grads))
}

/// One gradient step on the critic toward the target networks' TD targets.
pub fn critic_update<F: Scalar>(
    critic: &mut Mlp<F>,
    opt: &mut Optimizer<F>,
    target_actor: &Mlp<F>,
    target_critic: &Mlp<F>,
    batch: &Batch<F>,
    gamma: F,
    max_grad_norm: Option<F>,
) -> Result<CriticStats<F>, UpdateError> {
    if batch.is_empty() {
        return Err(UpdateError::EmptyBatch);
    }
    let y = td_targets(target_actor, target_critic, batch, gamma)?;
    let (td_loss, mut grads) = critic_loss_and_grads(critic, batch.obs.view(), batch.actions.view(), &y)?;
    if !td_loss.is_finite() {
        return Err(UpdateError::NonFinite {
            which: "critic",
            value: td_loss.to_f64().unwrap_or(f64::NAN),
        });
    }
    let clipped = match max_grad_norm {
        Some(m) => grads.clip_global_norm(m),
        None => false,
    };
    opt.apply(critic, &grads);
    Ok(CriticStats { td_loss, clipped })
}
