//! Twin critics with target networks, their TD update, and the
//! critic-guided action-improvement loop.
//!
//! The critics are the only learned value estimators in the system. Policy
//! improvement happens by pushing a batch of actions along the per-sample
//! gradient of the mean critic value for up to [`ImproveConfig::steps`]
//! steps, freezing any sample whose L1 drift from its starting action would
//! exceed the trust radius, and (optionally) rolling back steps that lower a
//! sample's value.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::neural::{Adam, DiffNet, NetCheckpoint, OutputActivation};
use crate::scalar::{cast, Scalar};

/// Critic training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Polyak factor for target updates.
    pub tau: f64,
    /// Std-dev of the smoothing noise added to target-policy actions.
    pub policy_noise: f64,
    /// Clip for that smoothing noise.
    pub noise_clip: f64,
    /// Target networks blend every this many critic updates.
    pub policy_freq: u64,
    /// Adam learning rate for both critics.
    pub lr: f64,
    /// Width of the two hidden layers.
    pub hidden: usize,
    /// Action bounds used to clamp noisy target actions.
    pub action_low: f64,
    pub action_high: f64,
}

impl Default for CriticConfig {
    fn default() -> Self {
        CriticConfig {
            gamma: 0.99,
            tau: 0.005,
            policy_noise: 0.2,
            noise_clip: 0.5,
            policy_freq: 128,
            lr: 3e-4,
            hidden: 256,
            action_low: -1.0,
            action_high: 1.0,
        }
    }
}

/// A batch of transitions in matrix form.
#[derive(Debug, Clone)]
pub struct TransitionBatch<T> {
    /// `(batch, state_dim)`
    pub states: Array2<T>,
    /// `(batch, action_dim)`
    pub actions: Array2<T>,
    pub rewards: Array1<T>,
    pub next_states: Array2<T>,
    /// 1 where the transition ended the MDP (not mere truncation), else 0.
    pub dones: Array1<T>,
}

impl<T> TransitionBatch<T> {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Settings for [`TwinCritics::improved_actions`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImproveConfig {
    /// Maximum ascent iterations.
    pub steps: usize,
    /// Multiplier on the per-sample gradient.
    pub step_scale: f64,
    /// Per-sample L1 budget around the starting action.
    pub trust_radius: f64,
    /// Roll back per-sample steps that lower the mean critic value.
    pub monotonic_guard: bool,
}

impl Default for ImproveConfig {
    fn default() -> Self {
        ImproveConfig {
            steps: 50,
            step_scale: 1.0,
            trust_radius: 1.0,
            monotonic_guard: true,
        }
    }
}

/// Diagnostics from one [`TwinCritics::improved_actions`] call.
#[derive(Debug, Clone, Copy)]
pub struct ImproveStats<T> {
    /// Ascent iterations actually executed.
    pub iterations: usize,
    /// Samples frozen by the trust region (or rolled back for good).
    pub frozen_samples: usize,
    /// Largest per-sample L1 distance between result and start.
    pub max_l1_drift: T,
    pub mean_value_before: T,
    pub mean_value_after: T,
}

/// Twin critics, their target copies, and optimizer state.
pub struct TwinCritics<T> {
    q_a: DiffNet<T>,
    q_b: DiffNet<T>,
    target_a: DiffNet<T>,
    target_b: DiffNet<T>,
    opt_a: Adam<T>,
    opt_b: Adam<T>,
    updates: u64,
    cfg: CriticConfig,
    state_dim: usize,
    action_dim: usize,
}

impl<T: Scalar> TwinCritics<T> {
    pub fn new(state_dim: usize, action_dim: usize, cfg: CriticConfig, rng: &mut ChaCha8Rng) -> Self {
        let sizes = [state_dim + action_dim, cfg.hidden, cfg.hidden, 1];
        let q_a = DiffNet::new(&sizes, OutputActivation::Linear, rng);
        let q_b = DiffNet::new(&sizes, OutputActivation::Linear, rng);
        Self::from_nets(q_a, q_b, state_dim, action_dim, cfg)
    }

    /// Build from explicit critic networks (targets start as copies).
    pub fn from_nets(
        q_a: DiffNet<T>,
        q_b: DiffNet<T>,
        state_dim: usize,
        action_dim: usize,
        cfg: CriticConfig,
    ) -> Self {
        assert_eq!(q_a.input_dim(), state_dim + action_dim);
        assert_eq!(q_b.input_dim(), state_dim + action_dim);
        assert_eq!(q_a.output_dim(), 1);
        assert_eq!(q_b.output_dim(), 1);
        let opt_a = Adam::with_lr(&q_a, cfg.lr);
        let opt_b = Adam::with_lr(&q_b, cfg.lr);
        TwinCritics {
            target_a: q_a.clone(),
            target_b: q_b.clone(),
            q_a,
            q_b,
            opt_a,
            opt_b,
            updates: 0,
            cfg,
            state_dim,
            action_dim,
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn config(&self) -> &CriticConfig {
        &self.cfg
    }

    pub fn q_a(&self) -> &DiffNet<T> {
        &self.q_a
    }

    fn join(states: ArrayView2<'_, T>, actions: ArrayView2<'_, T>) -> Array2<T> {
        concatenate![Axis(1), states, actions]
    }

    /// Per-sample `(Q_A + Q_B) / 2` at `(s, a)`.
    pub fn critic_values(&self, states: ArrayView2<'_, T>, actions: ArrayView2<'_, T>) -> Array1<T> {
        let input = Self::join(states, actions);
        let qa = self.q_a.forward(input.view());
        let qb = self.q_b.forward(input.view());
        let half = cast::<T>(0.5);
        Array1::from_iter(
            qa.column(0)
                .iter()
                .zip(qb.column(0).iter())
                .map(|(&a, &b)| half * (a + b)),
        )
    }

    /// Per-sample gradient of `(Q_A + Q_B) / 2` with respect to the action.
    ///
    /// Each row depends only on that row's `(s, a)`, so this is
    /// simultaneously the per-sample derivative and (up to the `1/batch`
    /// factor) the gradient of the batch-mean value.
    pub fn action_gradient(&self, states: ArrayView2<'_, T>, actions: ArrayView2<'_, T>) -> Array2<T> {
        let input = Self::join(states, actions);
        let half = Array2::from_elem((input.nrows(), 1), cast::<T>(0.5));
        let grad_a = {
            let cache = self.q_a.forward_cached(input.view());
            self.q_a.backward(&cache, half.view()).input
        };
        let grad_b = {
            let cache = self.q_b.forward_cached(input.view());
            self.q_b.backward(&cache, half.view()).input
        };
        let full = grad_a + grad_b;
        full.slice(ndarray::s![.., self.state_dim..]).to_owned()
    }

    /// Per-sample gradient of `Q_A` alone with respect to the action (used
    /// by the neural-actor baseline's policy update).
    pub fn q_a_action_gradient(
        &self,
        states: ArrayView2<'_, T>,
        actions: ArrayView2<'_, T>,
    ) -> Array2<T> {
        let input = Self::join(states, actions);
        let ones = Array2::from_elem((input.nrows(), 1), T::one());
        let cache = self.q_a.forward_cached(input.view());
        let grads = self.q_a.backward(&cache, ones.view());
        grads.input.slice(ndarray::s![.., self.state_dim..]).to_owned()
    }

    /// One TD update of both critics.
    ///
    /// `policy` maps next states to the target policy's actions (before
    /// smoothing noise). Returns both mean squared TD errors. Target
    /// networks blend every `policy_freq` calls.
    pub fn critic_update<P>(
        &mut self,
        batch: &TransitionBatch<T>,
        policy: P,
        rng: &mut ChaCha8Rng,
    ) -> (T, T)
    where
        P: FnOnce(ArrayView2<'_, T>) -> Array2<T>,
    {
        let b = batch.len();
        assert!(b > 0);
        let (low, high) = (cast::<T>(self.cfg.action_low), cast::<T>(self.cfg.action_high));

        // Smoothed, clamped target actions.
        let mut next_actions = policy(batch.next_states.view());
        assert_eq!(next_actions.dim(), (b, self.action_dim));
        let sigma = cast::<T>(self.cfg.policy_noise);
        let clip = cast::<T>(self.cfg.noise_clip);
        for a in next_actions.iter_mut() {
            let noise = (T::sample_std_normal(rng) * sigma).max(-clip).min(clip);
            *a = (*a + noise).max(low).min(high);
        }

        // y = r + gamma * (1 - done) * min(Q'_A, Q'_B).
        let next_input = Self::join(batch.next_states.view(), next_actions.view());
        let qa_next = self.target_a.forward(next_input.view());
        let qb_next = self.target_b.forward(next_input.view());
        let gamma = cast::<T>(self.cfg.gamma);
        let y = Array1::from_iter(
            qa_next
                .column(0)
                .iter()
                .zip(qb_next.column(0).iter())
                .zip(batch.rewards.iter().zip(batch.dones.iter()))
                .map(|((&qa, &qb), (&r, &done))| r + gamma * (T::one() - done) * qa.min(qb)),
        );

        let input = Self::join(batch.states.view(), batch.actions.view());
        let inv_b = T::one() / cast::<T>(b as f64);
        let two = cast::<T>(2.0);
        let mut losses = [T::zero(); 2];
        for (i, (net, opt)) in [(&mut self.q_a, &mut self.opt_a), (&mut self.q_b, &mut self.opt_b)]
            .into_iter()
            .enumerate()
        {
            let cache = net.forward_cached(input.view());
            let mut loss = T::zero();
            let mut dq = Array2::zeros((b, 1));
            for (j, (&q, &target)) in cache
                .output()
                .column(0)
                .iter()
                .zip(y.iter())
                .enumerate()
            {
                let err = q - target;
                loss = loss + err * err;
                dq[[j, 0]] = two * err * inv_b;
            }
            let grads = net.backward(&cache, dq.view());
            opt.step(net, &grads);
            losses[i] = loss * inv_b;
        }

        self.updates += 1;
        if self.updates.is_multiple_of(self.cfg.policy_freq) {
            self.soft_update(cast(self.cfg.tau));
        }
        (losses[0], losses[1])
    }

    /// Blend both target networks toward their online counterparts.
    pub fn soft_update(&mut self, tau: T) {
        self.target_a.blend_from(&self.q_a, tau);
        self.target_b.blend_from(&self.q_b, tau);
    }

    /// Gradient-ascend `initial` on the mean critic value, per sample, for
    /// up to `icfg.steps` iterations inside an L1 trust region.
    pub fn improved_actions(
        &self,
        states: ArrayView2<'_, T>,
        initial: ArrayView2<'_, T>,
        icfg: &ImproveConfig,
    ) -> (Array2<T>, ImproveStats<T>) {
        let b = initial.nrows();
        assert_eq!(states.nrows(), b);
        assert_eq!(initial.ncols(), self.action_dim);

        assert!(b > 0);
        let mean = |v: &Array1<T>| v.sum() / cast::<T>(v.len() as f64);

        let start = initial.to_owned();
        let mut current = start.clone();
        let mut frozen = vec![false; b];
        let mut values = self.critic_values(states, current.view());
        let mean_value_before = mean(&values);
        let scale = cast::<T>(icfg.step_scale);
        let radius = cast::<T>(icfg.trust_radius);

        let mut iterations = 0;
        for _ in 0..icfg.steps {
            if frozen.iter().all(|&f| f) {
                break;
            }
            iterations += 1;
            let grad = self.action_gradient(states, current.view());

            // Stage candidate rows; trust-region violations freeze the
            // sample at its last accepted (in-budget) action.
            let mut candidate = current.clone();
            for j in 0..b {
                if frozen[j] {
                    continue;
                }
                let mut drift = T::zero();
                for k in 0..self.action_dim {
                    candidate[[j, k]] = current[[j, k]] + scale * grad[[j, k]];
                    drift = drift + (candidate[[j, k]] - start[[j, k]]).abs();
                }
                if drift > radius {
                    for k in 0..self.action_dim {
                        candidate[[j, k]] = current[[j, k]];
                    }
                    frozen[j] = true;
                }
            }

            if icfg.monotonic_guard {
                let new_values = self.critic_values(states, candidate.view());
                for j in 0..b {
                    if frozen[j] {
                        continue;
                    }
                    if new_values[j] < values[j] {
                        // A fixed-size step overshot this sample's optimum;
                        // keep the previous action. The gradient there is
                        // unchanged, so the same step would repeat: freeze.
                        for k in 0..self.action_dim {
                            candidate[[j, k]] = current[[j, k]];
                        }
                        frozen[j] = true;
                    } else {
                        values[j] = new_values[j];
                    }
                }
            }
            current = candidate;
        }

        let mut max_l1_drift = T::zero();
        for j in 0..b {
            let mut drift = T::zero();
            for k in 0..self.action_dim {
                drift = drift + (current[[j, k]] - start[[j, k]]).abs();
            }
            max_l1_drift = max_l1_drift.max(drift);
        }
        let final_values = self.critic_values(states, current.view());
        let stats = ImproveStats {
            iterations,
            frozen_samples: frozen.iter().filter(|&&f| f).count(),
            max_l1_drift,
            mean_value_before,
            mean_value_after: mean(&final_values),
        };
        (current, stats)
    }

    pub fn checkpoint(&self) -> CriticsCheckpoint {
        CriticsCheckpoint {
            q_a: self.q_a.checkpoint(),
            q_b: self.q_b.checkpoint(),
            target_a: self.target_a.checkpoint(),
            target_b: self.target_b.checkpoint(),
            updates: self.updates,
        }
    }
}

/// Serialized critics (optimizer moments are not persisted; restored
/// critics serve evaluation and analysis, not resumed training).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticsCheckpoint {
    pub q_a: NetCheckpoint,
    pub q_b: NetCheckpoint,
    pub target_a: NetCheckpoint,
    pub target_b: NetCheckpoint,
    pub updates: u64,
}
