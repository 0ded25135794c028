//! Ring-buffer transition storage with uniform batch sampling.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;
use crate::td3::TransitionBatch;

/// Fixed-capacity ring buffer over flat per-field arrays.
///
/// `done` records true MDP termination only; truncation (step limits) still
/// bootstraps, so it is stored as 0.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    len: usize,
    head: usize,
    states: Vec<T>,
    actions: Vec<T>,
    rewards: Vec<T>,
    next_states: Vec<T>,
    dones: Vec<T>,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            capacity,
            state_dim,
            action_dim,
            len: 0,
            head: 0,
            states: vec![T::zero(); capacity * state_dim],
            actions: vec![T::zero(); capacity * action_dim],
            rewards: vec![T::zero(); capacity],
            next_states: vec![T::zero(); capacity * state_dim],
            dones: vec![T::zero(); capacity],
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

    pub fn push(&mut self, state: &[T], action: &[T], reward: T, next_state: &[T], done: bool) {
        assert_eq!(state.len(), self.state_dim);
        assert_eq!(action.len(), self.action_dim);
        assert_eq!(next_state.len(), self.state_dim);
        let i = self.head;
        self.states[i * self.state_dim..(i + 1) * self.state_dim].copy_from_slice(state);
        self.actions[i * self.action_dim..(i + 1) * self.action_dim].copy_from_slice(action);
        self.rewards[i] = reward;
        self.next_states[i * self.state_dim..(i + 1) * self.state_dim].copy_from_slice(next_state);
        self.dones[i] = if done { T::one() } else { T::zero() };
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Uniform sample without replacement within the batch, from the filled
    /// region only.
    pub fn sample(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> TransitionBatch<T> {
        assert!(
            batch_size <= self.len,
            "batch {batch_size} exceeds fill level {}",
            self.len
        );
        let picks = rand::seq::index::sample(rng, self.len, batch_size);
        let mut states = Array2::zeros((batch_size, self.state_dim));
        let mut actions = Array2::zeros((batch_size, self.action_dim));
        let mut rewards = Array1::zeros(batch_size);
        let mut next_states = Array2::zeros((batch_size, self.state_dim));
        let mut dones = Array1::zeros(batch_size);
        for (row, i) in picks.into_iter().enumerate() {
            for d in 0..self.state_dim {
                states[[row, d]] = self.states[i * self.state_dim + d];
                next_states[[row, d]] = self.next_states[i * self.state_dim + d];
            }
            for d in 0..self.action_dim {
                actions[[row, d]] = self.actions[i * self.action_dim + d];
            }
            rewards[row] = self.rewards[i];
            dones[row] = self.dones[i];
        }
        TransitionBatch {
            states,
            actions,
            rewards,
            next_states,
            dones,
        }
    }
}
