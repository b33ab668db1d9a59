//! FIFO replay buffer whose transitions also carry the prior policy's action.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::seq::index;

use super::mlp::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayEntry {
    pub obs: Vec<f32>,
    pub action: [f32; 2],
    pub reward: f32,
    pub next_obs: Vec<f32>,
    pub done: bool,
    pub prior: [f32; 2],
}

/// A sampled minibatch, one row per transition.
#[derive(Clone, Debug)]
pub struct Batch<F> {
    pub obs: Array2<F>,
    pub actions: Array2<F>,
    pub rewards: Array1<F>,
    pub next_obs: Array2<F>,
    pub done: Array1<F>,
    pub prior: Array2<F>,
}

impl<F: Scalar> Batch<F> {
    pub fn len(&self) -> usize {
        self.obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ring storage with FIFO eviction once `capacity` entries are held.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    len: usize,
    /// Slot the next push writes to.
    head: usize,
    obs: Vec<f32>,
    next_obs: Vec<f32>,
    actions: Vec<[f32; 2]>,
    priors: Vec<[f32; 2]>,
    rewards: Vec<f32>,
    done: Vec<bool>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            obs_dim,
            len: 0,
            head: 0,
            obs: Vec::new(),
            next_obs: Vec::new(),
            actions: Vec::new(),
            priors: Vec::new(),
            rewards: Vec::new(),
            done: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn push(&mut self, e: ReplayEntry) {
        assert_eq!(e.obs.len(), self.obs_dim);
        assert_eq!(e.next_obs.len(), self.obs_dim);
        let d = self.obs_dim;
        if self.len < self.capacity {
            // Still growing: the head is always at the end.
            self.obs.extend_from_slice(&e.obs);
            self.next_obs.extend_from_slice(&e.next_obs);
            self.actions.push(e.action);
            self.priors.push(e.prior);
            self.rewards.push(e.reward);
            self.done.push(e.done);
            self.len += 1;
        } else {
            let h = self.head;
            self.obs[h * d..(h + 1) * d].copy_from_slice(&e.obs);
            self.next_obs[h * d..(h + 1) * d].copy_from_slice(&e.next_obs);
            self.actions[h] = e.action;
            self.priors[h] = e.prior;
            self.rewards[h] = e.reward;
            self.done[h] = e.done;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    /// Entry by age: `0` is the oldest still stored.
    pub fn get(&self, age: usize) -> Option<ReplayEntry> {
        if age >= self.len {
            return None;
        }
        let slot = if self.len < self.capacity {
            age
        } else {
            (self.head + age) % self.capacity
        };
        let d = self.obs_dim;
        Some(ReplayEntry {
            obs: self.obs[slot * d..(slot + 1) * d].to_vec(),
            action: self.actions[slot],
            reward: self.rewards[slot],
            next_obs: self.next_obs[slot * d..(slot + 1) * d].to_vec(),
            done: self.done[slot],
            prior: self.priors[slot],
        })
    }

    /// Uniform sample of `n` distinct stored slots.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        assert!(n <= self.len, "batch of {n} from {} entries", self.len);
        index::sample(rng, self.len, n).into_vec()
    }

    /// Draws a batch without replacement.
    pub fn sample<F: Scalar, R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Batch<F> {
        let idx = self.sample_indices(n, rng);
        self.gather(&idx)
    }

    /// Builds a batch from raw slot indices.
    pub fn gather<F: Scalar>(&self, slots: &[usize]) -> Batch<F> {
        let d = self.obs_dim;
        let n = slots.len();
        let cvt = |v: f32| F::lit(v as f64);
        let mut obs = Array2::zeros((n, d));
        let mut next_obs = Array2::zeros((n, d));
        let mut actions = Array2::zeros((n, 2));
        let mut prior = Array2::zeros((n, 2));
        let mut rewards = Array1::zeros(n);
        let mut done = Array1::zeros(n);
        for (row, &s) in slots.iter().enumerate() {
            for (dst, &src) in obs.row_mut(row).iter_mut().zip(&self.obs[s * d..(s + 1) * d]) {
                *dst = cvt(src);
            }
            for (dst, &src) in next_obs.row_mut(row).iter_mut().zip(&self.next_obs[s * d..(s + 1) * d]) {
                *dst = cvt(src);
            }
            for k in 0..2 {
                actions[[row, k]] = cvt(self.actions[s][k]);
                prior[[row, k]] = cvt(self.priors[s][k]);
            }
            rewards[row] = cvt(self.rewards[s]);
            done[row] = if self.done[s] { F::one() } else { F::zero() };
        }
        Batch {
            obs,
            actions,
            rewards,
            next_obs,
            done,
            prior,
        }
    }
}
