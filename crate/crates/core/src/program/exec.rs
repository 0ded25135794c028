//! Stack execution of genomes.
//!
//! The stack starts pre-populated with the state vector repeated
//! [`STACK_PREFILL_REPEATS`] times (pushed element by element, `x[0]` first),
//! so the first pop retrieves `x[d-1]`. Genes are decoded left to right;
//! literals push a runtime-signed value, operators pop their arity and push
//! the result. Popping an empty stack makes the whole execution invalid
//! (`None`), which fitness later maps to a sentinel.

use rand::Rng;

use super::genome::{modal_token, sample_token, Genome, Token};
use super::ops::Op;
use crate::scalar::{cast, Scalar};

/// How many copies of the state vector seed the stack.
pub const STACK_PREFILL_REPEATS: usize = 20;

/// Stochastic executions averaged by [`evaluate`].
pub const EVAL_RUNS: usize = 10;

/// Fitness sentinel for invalid executions.
pub const INVALID_FITNESS: f64 = -1e6;

/// One gene, fully resolved for one execution.
enum DecodedGene<T> {
    /// Push this (already signed) literal value.
    Push(T),
    Apply(Op),
}

/// Stack whose bottom `STACK_PREFILL_REPEATS * d` entries are the repeated
/// state vector, materialized lazily: real pushes live in `real`, and pops
/// past them read the virtual prefill without ever allocating it.
struct PrefilledStack<'a, T> {
    state: &'a [T],
    /// Virtual entries still unconsumed below `real`.
    virtual_len: usize,
    real: Vec<T>,
}

impl<'a, T: Scalar> PrefilledStack<'a, T> {
    fn new(state: &'a [T]) -> Self {
        PrefilledStack {
            state,
            virtual_len: STACK_PREFILL_REPEATS * state.len(),
            real: Vec::with_capacity(8),
        }
    }

    #[inline]
    fn push(&mut self, v: T) {
        self.real.push(v);
    }

    /// Entry `i` counted from the stack bottom is `state[i % d]`, so the
    /// virtual top is `x[d-1]`.
    #[inline]
    fn pop(&mut self) -> Option<T> {
        if let Some(v) = self.real.pop() {
            return Some(v);
        }
        if self.virtual_len == 0 {
            return None;
        }
        self.virtual_len -= 1;
        Some(self.state[self.virtual_len % self.state.len()])
    }

    #[inline]
    fn top(&self) -> Option<T> {
        if let Some(&v) = self.real.last() {
            return Some(v);
        }
        if self.virtual_len == 0 {
            return None;
        }
        Some(self.state[(self.virtual_len - 1) % self.state.len()])
    }
}

/// Run a genome with per-gene resolution from `decode`. Returns the final
/// top of stack, or `None` on underflow (or an empty stack at the end).
fn execute_with<T: Scalar>(
    genome: &Genome<T>,
    state: &[T],
    mut decode: impl FnMut(T) -> DecodedGene<T>,
) -> Option<T> {
    let mut stack = PrefilledStack::new(state);
    let mut operands = [T::zero(); 3];
    for &gene in genome.genes() {
        match decode(gene) {
            DecodedGene::Push(v) => stack.push(v),
            DecodedGene::Apply(op) => {
                let arity = op.arity();
                for slot in operands.iter_mut().take(arity) {
                    *slot = stack.pop()?;
                }
                stack.push(op.apply(&operands[..arity]));
            }
        }
    }
    stack.top()
}

/// One stochastic execution: stochastic cast per gene, uniform ±1 literal
/// signs. The result is unbounded; policy code clamps it to action bounds.
pub fn execute_once<T: Scalar, R: Rng + ?Sized>(
    genome: &Genome<T>,
    state: &[T],
    rng: &mut R,
) -> Option<T> {
    execute_with(genome, state, |gene| match sample_token(gene, rng) {
        Token::Literal(magnitude) => {
            let positive: bool = rng.random();
            DecodedGene::Push(if positive { magnitude } else { -magnitude })
        }
        Token::Operator(op) => DecodedGene::Apply(op),
    })
}

/// Mean of [`EVAL_RUNS`] stochastic executions; `None` if any run is invalid.
pub fn evaluate<T: Scalar, R: Rng + ?Sized>(
    genome: &Genome<T>,
    state: &[T],
    rng: &mut R,
) -> Option<T> {
    let mut sum = T::zero();
    for _ in 0..EVAL_RUNS {
        sum = sum + execute_once(genome, state, rng)?;
    }
    Some(sum / cast(EVAL_RUNS as f64))
}

/// Deterministic execution: modal cast per gene, all literal signs positive.
/// This is the semantics rendered listings describe.
pub fn execute_modal<T: Scalar>(genome: &Genome<T>, state: &[T]) -> Option<T> {
    execute_with(genome, state, |gene| match modal_token(gene) {
        Token::Literal(magnitude) => DecodedGene::Push(magnitude),
        Token::Operator(op) => DecodedGene::Apply(op),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamId};

    /// Gene whose modal and (almost surely) stochastic cast is operator `op`.
    ///
    /// `floor(g + u)` is constant over u in (-0.5, 0.5) at half-integer
    /// genes, but `floor(g + 0.5)` then rounds up past the intended bin, so
    /// integer genes (stable for the modal cast, 50/50 for the stochastic
    /// one) are used where only the modal path runs.
    fn op_gene_center(op: Op) -> f64 {
        -(op.index() as f64) - 0.5
    }

    fn op_gene_modal(op: Op) -> f64 {
        -(op.index() as f64) - 1.0
    }

    #[test]
    fn postfix_example_three_two_sin_add() {
        // "3 2 sin +" under the deterministic decode with positive signs.
        let g = Genome::new(vec![3.0_f64, 2.0, op_gene_modal(Op::Sin), op_gene_modal(Op::Add)]);
        let got = execute_modal(&g, &[0.25, 0.75]).unwrap();
        assert_eq!(got, 2.0_f64.sin() + 3.0);
    }

    #[test]
    fn lone_add_consumes_interleaved_prefill() {
        // First pop is x[1], second x[0].
        let g = Genome::new(vec![op_gene_center(Op::Add)]);
        let mut rng = stream(5, StreamId::PolicyEval);
        let got = execute_once(&g, &[0.3_f64, 0.7], &mut rng).unwrap();
        assert_eq!(got, 1.0);
        let gm = Genome::new(vec![op_gene_modal(Op::Add)]);
        assert_eq!(execute_modal(&gm, &[0.3_f64, 0.7]).unwrap(), 1.0);
    }

    #[test]
    fn empty_genome_returns_prefill_top() {
        let g = Genome::new(Vec::<f64>::new());
        assert_eq!(execute_modal(&g, &[0.3, 0.7]).unwrap(), 0.7);
    }

    #[test]
    fn prefill_survives_deep_consumption() {
        // Five chained adds touch 6 of the 20 * d = 40 virtual entries, so
        // execution stays valid with plenty of headroom.
        let g = Genome::new(vec![op_gene_center(Op::Add); 5]);
        let mut rng = stream(6, StreamId::PolicyEval);
        let got = execute_once(&g, &[0.3_f64, 0.7], &mut rng).unwrap();
        // Pops: x1,x0 -> 1.0; then 1.0,x1 -> 1.7; 1.7,x0 -> 2.0; 2.0,x1 -> 2.7; 2.7,x0 -> 3.0.
        assert!((got - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_dimensional_state_underflows_to_invalid() {
        let g = Genome::new(vec![op_gene_center(Op::Add)]);
        let mut rng = stream(7, StreamId::PolicyEval);
        assert_eq!(execute_once::<f64, _>(&g, &[], &mut rng), None);
        assert_eq!(execute_modal::<f64>(&g, &[]), None);
        // Even an empty genome has no top on a 0-d prefill.
        assert_eq!(execute_modal::<f64>(&Genome::new(vec![]), &[]), None);
    }

    #[test]
    fn evaluate_averages_stochastic_runs() {
        // A pure-operator genome at bin centers is decode-deterministic, so
        // the 10-run mean equals a single run.
        let g = Genome::new(vec![op_gene_center(Op::Add)]);
        let mut rng = stream(8, StreamId::PolicyEval);
        assert_eq!(evaluate(&g, &[0.3_f64, 0.7], &mut rng).unwrap(), 1.0);

        // A single ±literal averages to something strictly inside (-m, m)
        // almost surely, with mean 0 over many evaluations.
        let lit = Genome::new(vec![2.0_f64]);
        let mut total = 0.0;
        let n = 20_000;
        for _ in 0..n {
            let v = evaluate(&lit, &[0.5, 0.5], &mut rng).unwrap();
            assert!(v.abs() <= 2.0);
            total += v;
        }
        let mean = total / f64::from(n);
        // stderr ~ 2/sqrt(10*20000) ~ 0.0045
        assert!(mean.abs() < 0.02, "grand mean {mean}");
    }

    #[test]
    fn evaluate_is_reproducible_for_equal_seeds() {
        let g = Genome::new(vec![1.5_f64, -0.3, op_gene_center(Op::Mul)]);
        let a = evaluate(&g, &[0.2, 0.9], &mut stream(42, StreamId::PolicyEval)).unwrap();
        let b = evaluate(&g, &[0.2, 0.9], &mut stream(42, StreamId::PolicyEval)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn deep_reciprocal_pole_inputs_stay_finite() {
        use crate::program::genome::gene_floor;
        // Random genomes over the full gene space on in-box states: every
        // valid output is finite (d >= 1 can never underflow with 5 genes).
        let mut rng = stream(9, StreamId::PolicyEval);
        for _ in 0..5_000 {
            let g = Genome::<f64>::random(5, 10.0, &mut rng);
            assert!(g.genes().iter().all(|&x| x > gene_floor::<f64>()));
            let v = evaluate(&g, &[0.5, 0.25], &mut rng)
                .expect("5-gene programs cannot underflow a 40-entry prefill");
            assert!(v.is_finite());
        }
    }
}
