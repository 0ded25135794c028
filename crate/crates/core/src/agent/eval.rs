//! Deterministic policy evaluation: seeded episodes, no exploration noise.

use rand_chacha::ChaCha8Rng;

use crate::envs::Environment;
use crate::rng::{substream, StreamId};
use crate::scalar::{cast, Scalar};

/// Mean and standard error of per-episode returns.
#[derive(Debug, Clone)]
pub struct EvalReport<T> {
    pub mean: T,
    pub stderr: T,
    pub returns: Vec<T>,
}

/// Roll `episodes` seeded episodes of `policy` (no exploration noise) and
/// summarize the returns. Episode `i` resets the environment with a seed
/// derived from `seed` and `i`, and gives the policy its own derived RNG, so
/// the report depends only on `(policy, seed, episodes)`.
pub fn evaluate_policy<T, E, P>(env: &mut E, mut policy: P, episodes: usize, seed: u64) -> EvalReport<T>
where
    T: Scalar,
    E: Environment<T>,
    P: FnMut(&[T], &mut ChaCha8Rng) -> Vec<T>,
{
    assert!(episodes >= 1);
    let mut returns = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut policy_rng = substream(seed, StreamId::FinalEval, ep as u64);
        let mut obs = env.reset(Some(seed.wrapping_add(ep as u64)));
        let mut total = T::zero();
        loop {
            let action = policy(&obs, &mut policy_rng);
            let out = env.step(&action);
            total = total + out.reward;
            if out.terminated || out.truncated {
                break;
            }
            obs = out.observation;
        }
        returns.push(total);
    }
    let n = cast::<T>(returns.len() as f64);
    let mean = returns.iter().fold(T::zero(), |acc, &r| acc + r) / n;
    let stderr = if returns.len() < 2 {
        T::zero()
    } else {
        let var = returns
            .iter()
            .fold(T::zero(), |acc, &r| acc + (r - mean) * (r - mean))
            / (n - T::one());
        (var / n).sqrt()
    };
    EvalReport {
        mean,
        stderr,
        returns,
    }
}
