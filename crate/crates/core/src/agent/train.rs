//! The three training arms and their shared run plumbing.
//!
//! All arms interact with the same environment interface, log per-episode
//! returns against the environment's lifetime step counter, and finish with
//! a deterministic multi-episode evaluation. They differ in how the policy
//! is produced:
//!
//! * `cmgp` — per-dimension programs regressed toward critic-improved
//!   actions; the GA never touches the environment.
//! * `td3` — a neural actor ascending the first critic.
//! * `gp` — programs evolved directly on single-episode returns; fitness
//!   episodes consume (and are charged against) the interaction budget.

use std::path::Path;

use ndarray::ArrayView2;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::artifacts::{self, ArtifactError, EvalArtifact, ProgramsArtifact};
use super::config::{Arm, ConfigError, Precision, RunConfig};
use super::eval::{evaluate_policy, EvalReport};
use super::policy::{actor_action, actor_actions_batch, program_action, program_actions_batch};
use super::replay::ReplayBuffer;
use crate::envs::{Environment, SimpleGoal};
use crate::evolution::{evolve, regression_fitness, EvolutionConfig, Population};
use crate::neural::{Adam, DiffNet, OutputActivation};
use crate::program::{render_listing, simplify, to_expression, uniform_domain, Expr, Genome, INVALID_FITNESS};
use crate::rng::{stream, substream, StreamId};
use crate::scalar::{cast, Scalar};
use crate::td3::TwinCritics;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

/// Everything a finished run reports, widened to f64 for logging and
/// cross-run comparison.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub arm: Arm,
    pub seed: u64,
    /// Lifetime environment interactions, fitness rollouts included.
    pub env_steps: u64,
    pub critic_updates: u64,
    /// Program-evolution or actor updates, depending on the arm.
    pub policy_updates: u64,
    /// Largest per-sample L1 drift any improvement call produced (only the
    /// program-evolution arm runs improvement).
    pub max_improve_drift: Option<f64>,
    pub eval_mean: f64,
    pub eval_stderr: f64,
    pub eval_returns: Vec<f64>,
    /// `(env step at episode end, episode return)` for every completed
    /// training episode.
    pub episode_returns: Vec<(u64, f64)>,
    /// Final genomes (one per action dimension) for the program arms.
    pub programs: Option<Vec<Vec<f64>>>,
}

/// Arm-level result still carrying typed state for artifact writing.
struct ArmResult<T: Scalar> {
    eval: EvalReport<T>,
    episode_returns: Vec<(u64, f64)>,
    ga_trace: Vec<GaTraceRow>,
    env_steps: u64,
    critic_updates: u64,
    policy_updates: u64,
    max_improve_drift: Option<f64>,
    programs: Option<Vec<Genome<T>>>,
    critics: Option<TwinCritics<T>>,
    actor: Option<DiffNet<T>>,
    state_dim: usize,
}

#[derive(Debug, Clone)]
struct GaTraceRow {
    step: u64,
    update: u64,
    dimension: usize,
    generation: usize,
    best_fitness: f64,
}

/// Run the configured arm to completion, optionally writing artifacts into
/// `out_dir` (created if missing): `config.json`, `returns.csv`,
/// `ga_trace.csv`, `programs.json`/`programs.txt`, `critics.json`,
/// `actor.json` and `eval.json`, as applicable to the arm.
pub fn run(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutcome, RunError> {
    config.validate()?;
    match config.precision {
        Precision::F32 => run_typed::<f32>(config, out_dir),
        Precision::F64 => run_typed::<f64>(config, out_dir),
    }
}

fn run_typed<T: Scalar>(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutcome, RunError> {
    let result = match config.arm {
        Arm::Cmgp => train_cmgp::<T>(config),
        Arm::Td3 => train_td3::<T>(config),
        Arm::Gp => train_gp::<T>(config),
    };
    finalize(config, result, out_dir)
}

/// Programs evolved against critic-improved actions.
fn train_cmgp<T: Scalar>(cfg: &RunConfig) -> ArmResult<T> {
    let seed = cfg.seed;
    let mut env = SimpleGoal::<T>::new(seed);
    let (low, high) = env.action_bounds();
    let state_dim = env.observation_dim();
    let action_dim = env.action_dim();

    let mut net_rng = stream(seed, StreamId::NetInit);
    let mut critics = TwinCritics::new(state_dim, action_dim, cfg.critic_config(), &mut net_rng);
    let icfg = cfg.improve_config();
    let ga_cfg = cfg.evolution_config();

    let mut evo_rngs: Vec<ChaCha8Rng> = (0..action_dim)
        .map(|d| substream(seed, StreamId::Evolution, d as u64))
        .collect();
    let mut populations: Vec<Population<T>> = evo_rngs
        .iter_mut()
        .map(|r| Population::random(&ga_cfg, r))
        .collect();
    // Arbitrary starting programs; acting is uniform-random until
    // learning_starts and the first update replaces them.
    let mut best: Vec<Genome<T>> = populations
        .iter()
        .map(|p| p.individuals()[0].clone())
        .collect();

    let mut explore_rng = stream(seed, StreamId::Exploration);
    let mut peval_rng = stream(seed, StreamId::PolicyEval);
    let mut replay_rng = stream(seed, StreamId::ReplaySampling);
    let mut tnoise_rng = stream(seed, StreamId::TargetNoise);

    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, state_dim, action_dim);
    let mut episode_returns = Vec::new();
    let mut ga_trace = Vec::new();
    let mut max_drift = 0.0_f64;
    let mut ga_updates = 0_u64;
    let sigma = cast::<T>(cfg.exploration_noise);

    let mut obs = env.reset(None);
    let mut ep_return = T::zero();
    for step in 0..cfg.total_steps {
        let action = if step < cfg.learning_starts {
            uniform_action(action_dim, low, high, &mut explore_rng)
        } else {
            let mut a = program_action(&best, &obs, low, high, &mut peval_rng);
            if cfg.exploration_noise_enabled {
                add_exploration_noise(&mut a, sigma, low, high, &mut explore_rng);
            }
            a
        };
        let out = env.step(&action);
        buffer.push(&obs, &action, out.reward, &out.observation, out.terminated);
        ep_return = ep_return + out.reward;
        if out.terminated || out.truncated {
            episode_returns.push((env.total_steps(), ep_return.to_f64_lossless()));
            ep_return = T::zero();
            obs = env.reset(None);
        } else {
            obs = out.observation;
        }

        if step >= cfg.learning_starts {
            let batch = buffer.sample(cfg.batch_size, &mut replay_rng);
            {
                let best_ref = &best;
                let peval = &mut peval_rng;
                critics.critic_update(
                    &batch,
                    |next: ArrayView2<'_, T>| {
                        program_actions_batch(best_ref, next, low, high, peval)
                    },
                    &mut tnoise_rng,
                );
            }

            if critics.updates() % cfg.policy_freq == 0 {
                ga_updates += 1;
                let states = buffer.sample(cfg.batch_size, &mut replay_rng).states;
                let current = program_actions_batch(&best, states.view(), low, high, &mut peval_rng);
                let steps_before = env.total_steps();
                let (improved, stats) =
                    critics.improved_actions(states.view(), current.view(), &icfg);
                let drift = stats.max_l1_drift.to_f64_lossless();
                assert!(
                    drift <= cfg.trust_radius + 1e-6,
                    "improved actions left the trust region: drift {drift}"
                );
                max_drift = max_drift.max(drift);

                for d in 0..action_dim {
                    let targets: Vec<T> = improved.column(d).to_vec();
                    let report = evolve(
                        &mut populations[d],
                        &ga_cfg,
                        &mut evo_rngs[d],
                        &mut |g: &Genome<T>, r: &mut ChaCha8Rng| {
                            regression_fitness(g, states.view(), &targets, r)
                        },
                    );
                    for (generation, bf) in report.generation_best.iter().enumerate() {
                        ga_trace.push(GaTraceRow {
                            step: env.total_steps(),
                            update: ga_updates,
                            dimension: d,
                            generation,
                            best_fitness: bf.to_f64_lossless(),
                        });
                    }
                    best[d] = report.best;
                }
                assert_eq!(
                    env.total_steps(),
                    steps_before,
                    "program evolution must not interact with the environment"
                );
            }
        }
    }

    let mut eval_env = SimpleGoal::<T>::new(seed);
    let eval = evaluate_policy(
        &mut eval_env,
        |s: &[T], r: &mut ChaCha8Rng| program_action(&best, s, low, high, r),
        cfg.eval_episodes,
        seed,
    );
    ArmResult {
        eval,
        episode_returns,
        ga_trace,
        env_steps: env.total_steps(),
        critic_updates: critics.updates(),
        policy_updates: ga_updates,
        max_improve_drift: Some(max_drift),
        programs: Some(best),
        critics: Some(critics),
        actor: None,
        state_dim,
    }
}

/// Neural actor trained from the first critic.
fn train_td3<T: Scalar>(cfg: &RunConfig) -> ArmResult<T> {
    let seed = cfg.seed;
    let mut env = SimpleGoal::<T>::new(seed);
    let (low, high) = env.action_bounds();
    let state_dim = env.observation_dim();
    let action_dim = env.action_dim();

    let mut net_rng = stream(seed, StreamId::NetInit);
    let mut critics = TwinCritics::new(state_dim, action_dim, cfg.critic_config(), &mut net_rng);
    let mut actor = DiffNet::<T>::new(
        &[state_dim, cfg.hidden, cfg.hidden, action_dim],
        OutputActivation::Tanh,
        &mut net_rng,
    );
    let mut target_actor = actor.clone();
    let mut actor_opt = Adam::with_lr(&actor, cfg.lr);

    let mut explore_rng = stream(seed, StreamId::Exploration);
    let mut replay_rng = stream(seed, StreamId::ReplaySampling);
    let mut tnoise_rng = stream(seed, StreamId::TargetNoise);

    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, state_dim, action_dim);
    let mut episode_returns = Vec::new();
    let mut actor_updates = 0_u64;
    let sigma = cast::<T>(cfg.exploration_noise);
    // Rescaling from tanh output to the action box contributes this factor
    // to the chain rule.
    let half_range = (high - low) / (T::one() + T::one());

    let mut obs = env.reset(None);
    let mut ep_return = T::zero();
    for step in 0..cfg.total_steps {
        let action = if step < cfg.learning_starts {
            uniform_action(action_dim, low, high, &mut explore_rng)
        } else {
            let mut a = actor_action(&actor, &obs, low, high);
            if cfg.exploration_noise_enabled {
                add_exploration_noise(&mut a, sigma, low, high, &mut explore_rng);
            }
            a
        };
        let out = env.step(&action);
        buffer.push(&obs, &action, out.reward, &out.observation, out.terminated);
        ep_return = ep_return + out.reward;
        if out.terminated || out.truncated {
            episode_returns.push((env.total_steps(), ep_return.to_f64_lossless()));
            ep_return = T::zero();
            obs = env.reset(None);
        } else {
            obs = out.observation;
        }

        if step >= cfg.learning_starts {
            let batch = buffer.sample(cfg.batch_size, &mut replay_rng);
            {
                let ta = &target_actor;
                critics.critic_update(
                    &batch,
                    |next: ArrayView2<'_, T>| actor_actions_batch(ta, next, low, high),
                    &mut tnoise_rng,
                );
            }

            if critics.updates() % cfg.policy_freq == 0 {
                actor_updates += 1;
                // One ascent step on mean Q_A(s, pi(s)) over the same batch.
                let cache = actor.forward_cached(batch.states.view());
                let pi = cache.output().mapv(|v| low + (v + T::one()) * half_range);
                let dq = critics.q_a_action_gradient(batch.states.view(), pi.view());
                let scale = -half_range / cast::<T>(batch.len() as f64);
                let out_grad = dq.mapv(|g| g * scale);
                let grads = actor.backward(&cache, out_grad.view());
                actor_opt.step(&mut actor, &grads);
                target_actor.blend_from(&actor, cast(cfg.tau));
            }
        }
    }

    let mut eval_env = SimpleGoal::<T>::new(seed);
    let eval = evaluate_policy(
        &mut eval_env,
        |s: &[T], _r: &mut ChaCha8Rng| actor_action(&actor, s, low, high),
        cfg.eval_episodes,
        seed,
    );
    ArmResult {
        eval,
        episode_returns,
        ga_trace: Vec::new(),
        env_steps: env.total_steps(),
        critic_updates: critics.updates(),
        policy_updates: actor_updates,
        max_improve_drift: None,
        programs: None,
        critics: Some(critics),
        actor: Some(actor),
        state_dim,
    }
}

/// Programs evolved on single-episode returns; every fitness evaluation
/// rolls a real episode and is charged against the interaction budget.
fn train_gp<T: Scalar>(cfg: &RunConfig) -> ArmResult<T> {
    let seed = cfg.seed;
    let mut env = SimpleGoal::<T>::new(seed);
    let (low, high) = env.action_bounds();
    let state_dim = env.observation_dim();
    let action_dim = env.action_dim();

    // One genome concatenates the per-dimension programs so a single GA
    // optimizes the whole policy.
    let ga_cfg = EvolutionConfig {
        num_genes: cfg.num_genes * action_dim,
        ..cfg.evolution_config()
    };
    let mut evo_rng = stream(seed, StreamId::Evolution);
    let mut pop = Population::<T>::random(&ga_cfg, &mut evo_rng);
    let mut best = split_genome(&pop.individuals()[0], cfg.num_genes, action_dim);

    let mut explore_rng = stream(seed, StreamId::Exploration);
    let mut peval_rng = stream(seed, StreamId::PolicyEval);

    let mut episode_returns: Vec<(u64, f64)> = Vec::new();
    let mut ga_trace = Vec::new();
    let mut updates = 0_u64;
    let budget = cfg.total_steps;
    let sigma = cast::<T>(cfg.exploration_noise);

    loop {
        // Policy update first, so acting always uses an evolved program.
        updates += 1;
        let mut exhausted = false;
        let report = {
            let env_ref = &mut env;
            let log_ref = &mut episode_returns;
            let exhausted_ref = &mut exhausted;
            evolve(
                &mut pop,
                &ga_cfg,
                &mut evo_rng,
                &mut |g: &Genome<T>, r: &mut ChaCha8Rng| {
                    if env_ref.total_steps() >= budget {
                        *exhausted_ref = true;
                        return cast(INVALID_FITNESS);
                    }
                    let genomes = split_genome(g, cfg.num_genes, action_dim);
                    rollout_episode(env_ref, &genomes, low, high, r, log_ref)
                },
            )
        };
        // On budget exhaustion the trailing evaluations are sentinels; the
        // report's best is still the genuinely best-evaluated individual
        // unless not even the first wave finished.
        if report.best_fitness.to_f64_lossless() > INVALID_FITNESS {
            best = split_genome(&report.best, cfg.num_genes, action_dim);
        }
        for (generation, bf) in report.generation_best.iter().enumerate() {
            ga_trace.push(GaTraceRow {
                step: env.total_steps(),
                update: updates,
                dimension: 0,
                generation,
                best_fitness: bf.to_f64_lossless(),
            });
        }
        if exhausted || env.total_steps() >= budget {
            break;
        }

        // The best program acts in the usual loop between updates.
        let mut acted = 0_u64;
        let mut obs = env.reset(None);
        let mut ep_return = T::zero();
        while acted < cfg.policy_freq && env.total_steps() < budget {
            let mut a = program_action(&best, &obs, low, high, &mut peval_rng);
            if cfg.exploration_noise_enabled {
                add_exploration_noise(&mut a, sigma, low, high, &mut explore_rng);
            }
            let out = env.step(&a);
            acted += 1;
            ep_return = ep_return + out.reward;
            if out.terminated || out.truncated {
                episode_returns.push((env.total_steps(), ep_return.to_f64_lossless()));
                ep_return = T::zero();
                obs = env.reset(None);
            } else {
                obs = out.observation;
            }
        }
    }

    let mut eval_env = SimpleGoal::<T>::new(seed);
    let eval = evaluate_policy(
        &mut eval_env,
        |s: &[T], r: &mut ChaCha8Rng| program_action(&best, s, low, high, r),
        cfg.eval_episodes,
        seed,
    );
    ArmResult {
        eval,
        episode_returns,
        ga_trace,
        env_steps: env.total_steps(),
        critic_updates: 0,
        policy_updates: updates,
        max_improve_drift: None,
        programs: Some(best),
        critics: None,
        actor: None,
        state_dim,
    }
}

/// One full episode with the given per-dimension programs (no exploration
/// noise); logs and returns the episode return.
fn rollout_episode<T: Scalar, E: Environment<T>>(
    env: &mut E,
    genomes: &[Genome<T>],
    low: T,
    high: T,
    rng: &mut ChaCha8Rng,
    log: &mut Vec<(u64, f64)>,
) -> T {
    let mut obs = env.reset(None);
    let mut total = T::zero();
    loop {
        let action = program_action(genomes, &obs, low, high, rng);
        let out = env.step(&action);
        total = total + out.reward;
        if out.terminated || out.truncated {
            break;
        }
        obs = out.observation;
    }
    log.push((env.total_steps(), total.to_f64_lossless()));
    total
}

fn split_genome<T: Scalar>(genome: &Genome<T>, genes_per: usize, dims: usize) -> Vec<Genome<T>> {
    assert_eq!(genome.len(), genes_per * dims);
    (0..dims)
        .map(|d| Genome::new(genome.genes()[d * genes_per..(d + 1) * genes_per].to_vec()))
        .collect()
}

fn uniform_action<T: Scalar>(dim: usize, low: T, high: T, rng: &mut ChaCha8Rng) -> Vec<T> {
    (0..dim).map(|_| T::sample_uniform(rng, low, high)).collect()
}

fn add_exploration_noise<T: Scalar>(
    action: &mut [T],
    sigma: T,
    low: T,
    high: T,
    rng: &mut ChaCha8Rng,
) {
    for a in action {
        *a = (*a + T::sample_std_normal(rng) * sigma).max(low).min(high);
    }
}

/// Widen the result, write artifacts if requested, and assemble the outcome.
fn finalize<T: Scalar>(
    cfg: &RunConfig,
    result: ArmResult<T>,
    out_dir: Option<&Path>,
) -> Result<RunOutcome, RunError> {
    let outcome = RunOutcome {
        arm: cfg.arm,
        seed: cfg.seed,
        env_steps: result.env_steps,
        critic_updates: result.critic_updates,
        policy_updates: result.policy_updates,
        max_improve_drift: result.max_improve_drift,
        eval_mean: result.eval.mean.to_f64_lossless(),
        eval_stderr: result.eval.stderr.to_f64_lossless(),
        eval_returns: result
            .eval
            .returns
            .iter()
            .map(|v| v.to_f64_lossless())
            .collect(),
        episode_returns: result.episode_returns,
        programs: result.programs.as_ref().map(|genomes| {
            genomes
                .iter()
                .map(|g| g.genes().iter().map(|v| v.to_f64_lossless()).collect())
                .collect()
        }),
    };

    if let Some(dir) = out_dir {
        artifacts::write_json(&dir.join("config.json"), cfg)?;
        artifacts::write_csv(
            &dir.join("returns.csv"),
            "step,episode_return",
            outcome
                .episode_returns
                .iter()
                .map(|(s, r)| format!("{s},{r}")),
        )?;
        if !result.ga_trace.is_empty() {
            artifacts::write_csv(
                &dir.join("ga_trace.csv"),
                "step,update,dimension,generation,best_fitness",
                result.ga_trace.iter().map(|row| {
                    format!(
                        "{},{},{},{},{}",
                        row.step, row.update, row.dimension, row.generation, row.best_fitness
                    )
                }),
            )?;
        }
        if let Some(genomes) = &result.programs {
            artifacts::write_json(
                &dir.join("programs.json"),
                &ProgramsArtifact::from_genomes(genomes, result.state_dim),
            )?;
            artifacts::write_atomic(
                &dir.join("programs.txt"),
                program_listing(genomes, result.state_dim).as_bytes(),
            )?;
        }
        if let Some(critics) = &result.critics {
            artifacts::write_json(&dir.join("critics.json"), &critics.checkpoint())?;
        }
        if let Some(actor) = &result.actor {
            artifacts::write_json(&dir.join("actor.json"), &actor.checkpoint())?;
        }
        artifacts::write_json(
            &dir.join("eval.json"),
            &EvalArtifact {
                episodes: outcome.eval_returns.len(),
                mean: outcome.eval_mean,
                stderr: outcome.eval_stderr,
                returns: outcome.eval_returns.clone(),
            },
        )?;
    }
    Ok(outcome)
}

/// Raw and constant-propagated listings of the final programs.
pub fn program_listing<T: Scalar>(genomes: &[Genome<T>], state_dim: usize) -> String {
    let exprs: Vec<Option<Expr<T>>> = genomes
        .iter()
        .map(|g| to_expression(g, state_dim))
        .collect();
    let raw = render_listing(&exprs);
    let domain = uniform_domain(state_dim, T::zero(), T::one());
    let simplified: Vec<Option<Expr<T>>> = exprs
        .iter()
        .map(|e| e.as_ref().map(|x| simplify(x, &domain)))
        .collect();
    format!(
        "# program (raw)\n{raw}\n\n# program (constants propagated over the unit box)\n{}\n",
        render_listing(&simplified)
    )
}
