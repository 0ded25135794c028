//! Environments behind a small reset/step interface.
//!
//! The one concrete environment is [`SimpleGoal`]: a continuous unit square
//! in which the agent steers toward a goal square at the origin corner while
//! avoiding a forbidden square in the middle. Rewards shape progress as ten
//! times the decrease in Euclidean distance to the goal square's nearest
//! point, with +10 for reaching the goal (episode ends) and a flat -10 for
//! entering the forbidden region (episode ends, shaping replaced).

use rand_chacha::ChaCha8Rng;

use crate::rng::{stream, StreamId};
use crate::scalar::{cast, Scalar};

/// Observation, reward and episode-end flags from one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub observation: Vec<T>,
    pub reward: T,
    /// The MDP reached a terminal state (goal or forbidden region).
    pub terminated: bool,
    /// The episode hit its step limit without terminating.
    pub truncated: bool,
}

/// Minimal environment interface used by every training arm.
pub trait Environment<T: Scalar> {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Per-dimension action bounds `(low, high)`; actions are clamped into
    /// them inside [`Environment::step`].
    fn action_bounds(&self) -> (T, T);
    /// Start a new episode. `Some(seed)` reseeds the environment stream for
    /// reproducible starts; `None` continues the current stream.
    fn reset(&mut self, seed: Option<u64>) -> Vec<T>;
    fn step(&mut self, action: &[T]) -> StepOutcome<T>;
    /// Lifetime interaction count. Every [`Environment::step`] call
    /// increments it by one, nothing else may touch it; policy updates that
    /// claim to be rollout-free are audited against this counter.
    fn total_steps(&self) -> u64;
}

/// Side length of the goal square anchored at the origin.
pub const GOAL_SIZE: f64 = 0.1;
/// The forbidden square is the open box `(PIT_LO, PIT_HI)^2`.
pub const PIT_LO: f64 = 0.4;
pub const PIT_HI: f64 = 0.6;
/// Actions scale to displacement by this factor.
pub const STEP_SCALE: f64 = 0.1;
/// Shaping reward per unit of distance progress.
pub const SHAPING_SCALE: f64 = 10.0;
pub const GOAL_BONUS: f64 = 10.0;
pub const PIT_REWARD: f64 = -10.0;
/// Episodes truncate after this many steps.
pub const EPISODE_LIMIT: u32 = 50;

/// Continuous gridworld on `[0,1]^2` with a goal corner and a central pit.
#[derive(Debug, Clone)]
pub struct SimpleGoal<T> {
    position: [T; 2],
    episode_steps: u32,
    total_steps: u64,
    needs_reset: bool,
    rng: ChaCha8Rng,
}

impl<T: Scalar> SimpleGoal<T> {
    pub fn new(seed: u64) -> Self {
        SimpleGoal {
            position: [T::zero(); 2],
            episode_steps: 0,
            total_steps: 0,
            needs_reset: true,
            rng: stream(seed, StreamId::Env),
        }
    }

    /// Euclidean distance from `p` to the nearest point of the goal square;
    /// zero on the square itself.
    pub fn goal_distance(p: &[T; 2]) -> T {
        let gx = (p[0] - cast(GOAL_SIZE)).max(T::zero());
        let gy = (p[1] - cast(GOAL_SIZE)).max(T::zero());
        (gx * gx + gy * gy).sqrt()
    }

    fn in_goal(p: &[T; 2]) -> bool {
        p[0] < cast(GOAL_SIZE) && p[1] < cast(GOAL_SIZE)
    }

    /// Strict interior: the boundary does not count as inside.
    fn in_pit(p: &[T; 2]) -> bool {
        p[0] > cast(PIT_LO) && p[0] < cast(PIT_HI) && p[1] > cast(PIT_LO) && p[1] < cast(PIT_HI)
    }

    fn sample_start(rng: &mut ChaCha8Rng) -> [T; 2] {
        loop {
            let p = [
                T::sample_uniform(rng, T::zero(), T::one()),
                T::sample_uniform(rng, T::zero(), T::one()),
            ];
            // Exclude both episode-ending regions (the pit with its closed
            // boundary) so episodes never start finished.
            let on_pit = p[0] >= cast(PIT_LO)
                && p[0] <= cast(PIT_HI)
                && p[1] >= cast(PIT_LO)
                && p[1] <= cast(PIT_HI);
            if !Self::in_goal(&p) && !on_pit {
                return p;
            }
        }
    }

    pub fn position(&self) -> [T; 2] {
        self.position
    }
}

impl<T: Scalar> Environment<T> for SimpleGoal<T> {
    fn observation_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn action_bounds(&self) -> (T, T) {
        (-T::one(), T::one())
    }

    fn reset(&mut self, seed: Option<u64>) -> Vec<T> {
        if let Some(s) = seed {
            self.rng = stream(s, StreamId::Env);
        }
        self.position = Self::sample_start(&mut self.rng);
        self.episode_steps = 0;
        self.needs_reset = false;
        self.position.to_vec()
    }

    fn step(&mut self, action: &[T]) -> StepOutcome<T> {
        assert!(!self.needs_reset, "step called on a finished episode");
        assert_eq!(action.len(), 2, "SimpleGoal takes 2-dimensional actions");
        self.total_steps += 1;
        self.episode_steps += 1;

        let old = self.position;
        let mut new = old;
        for i in 0..2 {
            let a = action[i].max(-T::one()).min(T::one());
            new[i] = (old[i] + cast::<T>(STEP_SCALE) * a)
                .max(T::zero())
                .min(T::one());
        }
        self.position = new;

        let shaping =
            cast::<T>(SHAPING_SCALE) * (Self::goal_distance(&old) - Self::goal_distance(&new));
        let (reward, terminated) = if Self::in_pit(&new) {
            (cast(PIT_REWARD), true)
        } else if Self::in_goal(&new) {
            (shaping + cast(GOAL_BONUS), true)
        } else {
            (shaping, false)
        };
        let truncated = !terminated && self.episode_steps >= EPISODE_LIMIT;
        if terminated || truncated {
            self.needs_reset = true;
        }
        StepOutcome {
            observation: new.to_vec(),
            reward,
            terminated,
            truncated,
        }
    }

    fn total_steps(&self) -> u64 {
        self.total_steps
    }
}

/// Clamp every action entry into the environment's bounds.
pub fn clamp_action<T: Scalar>(action: &mut [T], low: T, high: T) {
    for a in action {
        *a = (*a).max(low).min(high);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> SimpleGoal<f64> {
        SimpleGoal::new(12345)
    }

    #[test]
    fn reset_avoids_both_terminal_regions_and_reports_the_position() {
        let mut e = env();
        for _ in 0..10_000 {
            let obs = e.reset(None);
            let p = e.position();
            assert_eq!(obs, p.to_vec());
            assert!(!(p[0] < 0.1 && p[1] < 0.1), "started in goal: {p:?}");
            assert!(
                !(p[0] >= 0.4 && p[0] <= 0.6 && p[1] >= 0.4 && p[1] <= 0.6),
                "started in pit: {p:?}"
            );
            assert!((0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]));
        }
    }

    #[test]
    fn seeded_reset_is_reproducible() {
        let mut a = env();
        let mut b = SimpleGoal::<f64>::new(999);
        assert_eq!(a.reset(Some(7)), b.reset(Some(7)));
        // Continuing without a seed diverges deterministically per instance.
        let a2 = a.reset(None);
        let mut c = env();
        c.reset(Some(7));
        assert_eq!(a2, c.reset(None));
    }

    #[test]
    fn shaping_reward_matches_the_hand_computed_example() {
        let mut e = env();
        e.reset(Some(1));
        e.position = [0.5, 0.8];
        let out = e.step(&[-1.0, -1.0]);
        assert_eq!(out.observation, vec![0.4, 0.7000000000000001]);
        let expected = 10.0
            * ((0.4_f64.powi(2) + 0.7_f64.powi(2)).sqrt()
                - (0.3_f64.powi(2) + 0.6_f64.powi(2)).sqrt());
        // Hand value: 10 * (0.80623 - 0.67082) = 1.3541 (4 d.p.).
        assert!((out.reward - 1.3541).abs() < 5e-5, "reward {}", out.reward);
        assert!((out.reward - expected).abs() < 1e-9);
        assert!(!out.terminated && !out.truncated);
    }

    #[test]
    fn pit_entry_replaces_shaping_with_minus_ten() {
        let mut e = env();
        e.reset(Some(2));
        e.position = [0.5, 0.39];
        let out = e.step(&[0.0, 1.0]);
        assert_eq!(e.position(), [0.5, 0.49]);
        assert_eq!(out.reward, -10.0);
        assert!(out.terminated);
    }

    #[test]
    fn pit_boundary_does_not_terminate() {
        let mut e = env();
        e.reset(Some(3));
        e.position = [0.4, 0.3];
        let out = e.step(&[0.0, 1.0]);
        assert_eq!(e.position(), [0.4, 0.4]);
        assert!(!out.terminated, "boundary counted as inside");
    }

    #[test]
    fn goal_entry_adds_the_bonus_to_shaping() {
        let mut e = env();
        e.reset(Some(4));
        e.position = [0.05, 0.15];
        let d_old = SimpleGoal::goal_distance(&[0.05, 0.15]);
        let out = e.step(&[0.0, -1.0]);
        assert_eq!(e.position(), [0.05, 0.04999999999999999]);
        assert!(out.terminated);
        let d_new = SimpleGoal::goal_distance(&e.position());
        assert_eq!(d_new, 0.0);
        assert!((out.reward - (10.0 * (d_old - d_new) + 10.0)).abs() < 1e-12);
    }

    #[test]
    fn episode_truncates_at_the_step_limit_without_bonus() {
        let mut e = env();
        e.reset(Some(5));
        e.position = [0.9, 0.9];
        let mut last = None;
        for i in 0..EPISODE_LIMIT {
            // Oscillate in place away from every terminal region.
            let a = if i % 2 == 0 { 0.1 } else { -0.1 };
            last = Some(e.step(&[a, 0.0]));
            let out = last.as_ref().unwrap();
            if i + 1 < EPISODE_LIMIT {
                assert!(!out.terminated && !out.truncated);
            }
        }
        let out = last.unwrap();
        assert!(out.truncated && !out.terminated);
        assert!(out.reward.abs() < 2.0, "no bonus on truncation");
    }

    #[test]
    fn movement_clamps_at_walls_and_out_of_range_actions_are_clamped() {
        let mut e = env();
        e.reset(Some(6));
        e.position = [0.95, 0.02];
        let out = e.step(&[5.0, -5.0]);
        // Action clamps to (1, -1), movement clamps to the box.
        assert_eq!(e.position(), [1.0, 0.0]);
        assert!(out.observation == vec![1.0, 0.0]);
    }

    #[test]
    fn telescoping_shaping_identity_along_nonterminal_trajectories() {
        let mut e = env();
        let mut action_rng = stream(42, StreamId::Exploration);
        for _ in 0..200 {
            let start = e.reset(None);
            let d0 = SimpleGoal::goal_distance(&[start[0], start[1]]);
            let mut total = 0.0;
            loop {
                let a = [
                    f64::sample_uniform(&mut action_rng, -1.0, 1.0),
                    f64::sample_uniform(&mut action_rng, -1.0, 1.0),
                ];
                let out = e.step(&a);
                if out.terminated {
                    // Goal/pit episodes leave the telescoping regime.
                    break;
                }
                total += out.reward;
                if out.truncated {
                    let d_t = SimpleGoal::goal_distance(&e.position());
                    assert!(
                        (total - 10.0 * (d0 - d_t)).abs() < 1e-9,
                        "telescoping violated: {total} vs {}",
                        10.0 * (d0 - d_t)
                    );
                    break;
                }
            }
        }
    }

    #[test]
    fn positions_stay_in_the_box_and_episodes_stay_short() {
        let mut e = env();
        let mut action_rng = stream(43, StreamId::Exploration);
        let mut episode_len = 0;
        e.reset(None);
        for _ in 0..50_000 {
            let a = [
                f64::sample_uniform(&mut action_rng, -2.0, 2.0),
                f64::sample_uniform(&mut action_rng, -2.0, 2.0),
            ];
            let out = e.step(&a);
            episode_len += 1;
            let p = e.position();
            assert!((0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]));
            assert!(episode_len <= EPISODE_LIMIT);
            if out.terminated || out.truncated {
                episode_len = 0;
                e.reset(None);
            }
        }
    }

    #[test]
    fn step_counter_counts_every_step_and_nothing_else() {
        let mut e = env();
        assert_eq!(e.total_steps(), 0);
        e.reset(Some(1));
        assert_eq!(e.total_steps(), 0, "reset must not count as interaction");
        let mut steps = 0;
        for _ in 0..500 {
            let out = e.step(&[0.3, -0.2]);
            steps += 1;
            if out.terminated || out.truncated {
                e.reset(None);
            }
        }
        assert_eq!(e.total_steps(), steps);
    }

    #[test]
    #[should_panic(expected = "finished episode")]
    fn stepping_a_finished_episode_panics() {
        let mut e = env();
        e.reset(Some(8));
        e.position = [0.45, 0.39];
        let out = e.step(&[0.0, 1.0]);
        assert!(out.terminated);
        let _ = e.step(&[0.0, 0.0]);
    }
}
