//! Turning programs and actor networks into action functions.
//!
//! Multi-dimensional actions come from one program per dimension, evaluated
//! independently on the same state and concatenated. Program outputs are
//! clamped to the action bounds before leaving the policy; the unclamped
//! value only matters inside the GA's regression fitness.

use ndarray::{Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;

use crate::neural::DiffNet;
use crate::program::{evaluate, Genome};
use crate::scalar::Scalar;

/// Action of the program-per-dimension policy on one state, clamped to
/// `[low, high]`. A program whose execution is invalid contributes 0 (it
/// cannot happen with the default genome length on the built-in
/// environment, where the pre-filled stack is deeper than any possible pop
/// sequence, but the policy stays total).
pub fn program_action<T: Scalar>(
    genomes: &[Genome<T>],
    state: &[T],
    low: T,
    high: T,
    rng: &mut ChaCha8Rng,
) -> Vec<T> {
    genomes
        .iter()
        .map(|g| {
            evaluate(g, state, rng)
                .unwrap_or_else(T::zero)
                .max(low)
                .min(high)
        })
        .collect()
}

/// [`program_action`] over a batch of states, row by row.
pub fn program_actions_batch<T: Scalar>(
    genomes: &[Genome<T>],
    states: ArrayView2<'_, T>,
    low: T,
    high: T,
    rng: &mut ChaCha8Rng,
) -> Array2<T> {
    let mut out = Array2::zeros((states.nrows(), genomes.len()));
    for (row, state) in states.axis_iter(Axis(0)).enumerate() {
        let state = state.to_slice().expect("batch rows are contiguous");
        let action = program_action(genomes, state, low, high, rng);
        for (k, v) in action.into_iter().enumerate() {
            out[[row, k]] = v;
        }
    }
    out
}

/// Deterministic actor action on one state. The network's tanh output lands
/// in `[-1, 1]`; affine rescaling maps it onto `[low, high]`.
pub fn actor_action<T: Scalar>(net: &DiffNet<T>, state: &[T], low: T, high: T) -> Vec<T> {
    let input = Array2::from_shape_vec((1, state.len()), state.to_vec())
        .expect("row vector from slice");
    let out = net.forward(input.view());
    out.row(0).iter().map(|&v| rescale(v, low, high)).collect()
}

/// [`actor_action`] over a batch of states.
pub fn actor_actions_batch<T: Scalar>(
    net: &DiffNet<T>,
    states: ArrayView2<'_, T>,
    low: T,
    high: T,
) -> Array2<T> {
    net.forward(states).mapv(|v| rescale(v, low, high))
}

/// Map `[-1, 1]` onto `[low, high]`.
fn rescale<T: Scalar>(v: T, low: T, high: T) -> T {
    let half = (high - low) / (T::one() + T::one());
    low + (v + T::one()) * half
}
