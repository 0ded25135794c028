//! Run configuration shared by all training arms.
//!
//! The struct is flat so a config file is a plain JSON object of scalars;
//! command-line flags override individual fields.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::EvolutionConfig;
use crate::td3::{CriticConfig, ImproveConfig};

/// Which training algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    /// Programs evolved against critic-improved actions.
    Cmgp,
    /// Neural actor trained from the critics.
    Td3,
    /// Programs evolved on episode returns alone.
    Gp,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Cmgp => "cmgp",
            Arm::Td3 => "td3",
            Arm::Gp => "gp",
        })
    }
}

impl FromStr for Arm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cmgp" => Ok(Arm::Cmgp),
            "td3" => Ok(Arm::Td3),
            "gp" => Ok(Arm::Gp),
            other => Err(ConfigError::new(format!(
                "unknown arm '{other}' (expected cmgp, td3 or gp)"
            ))),
        }
    }
}

/// Floating-point width used for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(ConfigError::new(format!(
                "unknown precision '{other}' (expected f32 or f64)"
            ))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid config: {0}")]
pub struct ConfigError(String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }
}

/// Everything a single training run needs, as one flat record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub arm: Arm,
    /// Environment identifier; `simple_goal` is the only one built in.
    pub env: String,
    pub seed: u64,
    /// Environment-interaction budget (for the rollout-fitness arm this
    /// includes fitness episodes).
    pub total_steps: u64,
    /// Steps of uniform-random acting before any update.
    pub learning_starts: u64,
    /// Critic updates between policy (program or actor) updates.
    pub policy_freq: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Std-dev of Gaussian exploration noise on executed actions.
    pub exploration_noise: f64,
    /// Whether exploration noise is added on top of policy actions.
    pub exploration_noise_enabled: bool,
    pub gamma: f64,
    pub tau: f64,
    /// Target-policy smoothing noise and its clip.
    pub policy_noise: f64,
    pub noise_clip: f64,
    pub lr: f64,
    /// Hidden width of critics (and the neural actor).
    pub hidden: usize,
    /// Action-improvement settings.
    pub improve_steps: usize,
    pub improve_step_scale: f64,
    pub trust_radius: f64,
    pub monotonic_guard: bool,
    /// Genetic-algorithm settings (genes are per action dimension).
    pub num_genes: usize,
    pub num_individuals: usize,
    pub num_generations: usize,
    pub num_parents_mating: usize,
    pub mutation_probability: f64,
    pub mutation_range: f64,
    pub literal_max: f64,
    /// Episodes in the final deterministic evaluation.
    pub eval_episodes: usize,
    pub precision: Precision,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            arm: Arm::Cmgp,
            env: "simple_goal".to_owned(),
            seed: 0,
            total_steps: 15_000,
            learning_starts: 2_000,
            policy_freq: 128,
            batch_size: 256,
            buffer_capacity: 100_000,
            exploration_noise: 0.1,
            exploration_noise_enabled: true,
            gamma: 0.99,
            tau: 0.005,
            policy_noise: 0.2,
            noise_clip: 0.5,
            lr: 3e-4,
            hidden: 256,
            improve_steps: 50,
            improve_step_scale: 1.0,
            trust_radius: 1.0,
            monotonic_guard: true,
            num_genes: 5,
            num_individuals: 50,
            num_generations: 20,
            num_parents_mating: 20,
            mutation_probability: 0.1,
            mutation_range: 10.0,
            literal_max: 10.0,
            eval_episodes: 20,
            precision: Precision::F32,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.env != "simple_goal" {
            return Err(ConfigError::new(format!(
                "unknown environment '{}' (only simple_goal is built in)",
                self.env
            )));
        }
        if self.learning_starts > self.total_steps {
            return Err(ConfigError::new(format!(
                "learning_starts ({}) must not exceed total_steps ({})",
                self.learning_starts, self.total_steps
            )));
        }
        if self.batch_size == 0 || self.batch_size > self.learning_starts as usize {
            return Err(ConfigError::new(format!(
                "batch_size ({}) must be in 1..=learning_starts ({})",
                self.batch_size, self.learning_starts
            )));
        }
        if self.policy_freq == 0 {
            return Err(ConfigError::new("policy_freq must be positive"));
        }
        if self.num_parents_mating < 2 || self.num_parents_mating > self.num_individuals {
            return Err(ConfigError::new(
                "num_parents_mating must be in 2..=num_individuals",
            ));
        }
        if self.eval_episodes == 0 {
            return Err(ConfigError::new("eval_episodes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(ConfigError::new("mutation_probability must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            num_genes: self.num_genes,
            num_individuals: self.num_individuals,
            num_generations: self.num_generations,
            num_parents_mating: self.num_parents_mating,
            mutation_probability: self.mutation_probability,
            mutation_range: self.mutation_range,
            literal_max: self.literal_max,
        }
    }

    pub fn critic_config(&self) -> CriticConfig {
        CriticConfig {
            gamma: self.gamma,
            tau: self.tau,
            policy_noise: self.policy_noise,
            noise_clip: self.noise_clip,
            policy_freq: self.policy_freq,
            lr: self.lr,
            hidden: self.hidden,
            action_low: -1.0,
            action_high: 1.0,
        }
    }

    pub fn improve_config(&self) -> ImproveConfig {
        ImproveConfig {
            steps: self.improve_steps,
            step_scale: self.improve_step_scale,
            trust_radius: self.trust_radius,
            monotonic_guard: self.monotonic_guard,
        }
    }
}
