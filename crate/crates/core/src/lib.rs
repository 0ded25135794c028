//! Evolved program policies for continuous control, steered by twin critics.
//!
//! The policy is a small, human-readable program per action dimension,
//! evolved by a genetic algorithm. Instead of scoring programs with episode
//! rollouts, TD3-style twin critics are trained off-policy and queried for
//! action gradients; a trust-region ascent on the critic surface yields
//! improved target actions, and the GA regresses the programs toward those
//! targets. Environment interaction is decoupled from program search.
//!
//! Modules, bottom-up:
//!
//! * [`program`] — genome encoding, stochastic stack VM, expression trees,
//!   rendering and sound simplification;
//! * [`evolution`] — the genetic algorithm (steady-state selection,
//!   single-point crossover, additive mutation, elitism) and the
//!   regression fitness used to chase improved actions;
//! * [`neural`] — hand-rolled dense networks with exact gradients for both
//!   parameters and inputs, plus Adam;
//! * [`td3`] — twin critics, delayed target updates, per-sample action
//!   gradients and the trust-region action-improvement loop;
//! * [`envs`] — the SimpleGoal navigation task;
//! * [`agent`] — replay buffer, run configuration, the three training arms
//!   (program actor, neural TD3 baseline, rollout-fitness GP baseline) and
//!   policy evaluation.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); concrete
//! aliases for the common instantiations live at the crate root.

pub mod agent;
pub mod envs;
pub mod evolution;
pub mod neural;
pub mod program;
pub mod rng;
pub mod scalar;
pub mod td3;

pub use scalar::Scalar;

/// Default training precision: matches the reference deep-RL stack and is
/// about twice as fast through the matmul kernels.
pub type Genome32 = program::Genome<f32>;
pub type DiffNet32 = neural::DiffNet<f32>;
pub type SimpleGoal32 = envs::SimpleGoal<f32>;

/// Double precision; used by gradient checks and numeric oracles.
pub type Genome64 = program::Genome<f64>;
pub type DiffNet64 = neural::DiffNet<f64>;
pub type SimpleGoal64 = envs::SimpleGoal<f64>;
