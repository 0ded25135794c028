//! The training agent: configuration, replay, acting, evaluation,
//! artifact IO, and the end-to-end training loops for all three arms.

pub mod artifacts;
pub mod config;
pub mod eval;
pub mod policy;
pub mod replay;
pub mod train;

pub use artifacts::{ArtifactError, EvalArtifact, ProgramsArtifact};
pub use config::{Arm, ConfigError, Precision, RunConfig};
pub use eval::{evaluate_policy, EvalReport};
pub use policy::{actor_action, actor_actions_batch, program_action, program_actions_batch};
pub use replay::ReplayBuffer;
pub use train::{program_listing, run, RunError, RunOutcome};
