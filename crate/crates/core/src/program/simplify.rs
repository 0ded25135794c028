//! Sound simplification of expression trees over a domain box.
//!
//! Two rewrites, both exact over every state in the domain and every literal
//! sign assignment:
//!
//! * constant folding — a variable-free subtree whose value is independent
//!   of all its literal signs (checked by enumerating the 2^k assignments)
//!   collapses to a sign-fixed constant;
//! * select elimination — when the test operand is provably strictly
//!   positive (or provably non-positive) for all states and signs, the
//!   select node is replaced by the corresponding branch. Constant tests are
//!   decided by enumeration, state-dependent ones by interval arithmetic.
//!
//! Nothing else is rewritten, so surviving ±literals keep their sign slots
//! and simplified trees can be compared against the original under any sign
//! assignment.

use super::expr::Expr;
use super::ops::{Op, EXP_ARG_MAX, RECIPROCAL_GUARD, RECIPROCAL_GUARD_VALUE};
use crate::scalar::{cast, Scalar};

/// Largest sign-slot count enumerated exactly (2^k assignments).
const MAX_ENUMERATED_SLOTS: usize = 12;

/// Closed interval with finite bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(v: T) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn hull(a: Self, b: Self) -> Self {
        Interval {
            lo: a.lo.min(b.lo),
            hi: a.hi.max(b.hi),
        }
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Range of an operator applied to operand ranges (pop order), mirroring the
/// domain guards of [`Op::apply`].
fn op_interval<T: Scalar>(op: Op, args: &[Interval<T>]) -> Interval<T> {
    let a = args[0];
    let zero = T::zero();
    let one = T::one();
    match op {
        Op::Abs => {
            if a.lo >= zero {
                a
            } else if a.hi <= zero {
                Interval::new(-a.hi, -a.lo)
            } else {
                Interval::new(zero, a.hi.max(-a.lo))
            }
        }
        Op::NegAbs => negate(op_interval(Op::Abs, args)),
        // Coarse but sound bound for the trigonometric operators.
        Op::Sin | Op::NegSin | Op::Cos | Op::NegCos => Interval::new(-one, one),
        Op::Exp => {
            let cap = cast::<T>(EXP_ARG_MAX);
            Interval::new(a.lo.min(cap).exp(), a.hi.min(cap).exp())
        }
        Op::NegExp => negate(op_interval(Op::Exp, args)),
        Op::Sqrt => Interval::new(a.lo.max(zero).sqrt(), a.hi.max(zero).sqrt()),
        Op::NegSqrt => negate(op_interval(Op::Sqrt, args)),
        Op::Neg => negate(a),
        Op::Add => Interval::new(a.lo + args[1].lo, a.hi + args[1].hi),
        Op::Mul => {
            let b = args[1];
            let products = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi];
            let mut lo = products[0];
            let mut hi = products[0];
            for &p in &products[1..] {
                lo = lo.min(p);
                hi = hi.max(p);
            }
            Interval::new(lo, hi)
        }
        // Undecided test: the result may be either branch.
        Op::Select => Interval::hull(args[1], args[2]),
        Op::Max => Interval::new(a.lo.max(args[1].lo), a.hi.max(args[1].hi)),
        Op::Min => Interval::new(a.lo.min(args[1].lo), a.hi.min(args[1].hi)),
        Op::Id => a,
        Op::Reciprocal => reciprocal_interval(a),
        // trunc is monotone non-decreasing, so endpoint images bound it.
        Op::Trunc => Interval::new(Op::Trunc.apply(&[a.lo]), Op::Trunc.apply(&[a.hi])),
    }
}

fn negate<T: Scalar>(iv: Interval<T>) -> Interval<T> {
    Interval::new(-iv.hi, -iv.lo)
}

/// `reciprocal` is 1/x outside the guard band [-0.05, 0.05] and 20 inside;
/// hull the pieces the operand interval intersects.
fn reciprocal_interval<T: Scalar>(a: Interval<T>) -> Interval<T> {
    let guard = cast::<T>(RECIPROCAL_GUARD);
    let guard_value = cast::<T>(RECIPROCAL_GUARD_VALUE);
    let mut piece: Option<Interval<T>> = None;
    let mut add = |iv: Interval<T>| {
        piece = Some(match piece {
            Some(acc) => Interval::hull(acc, iv),
            None => iv,
        });
    };
    if a.lo <= guard && a.hi >= -guard {
        add(Interval::point(guard_value));
    }
    if a.hi > guard {
        // 1/x decreasing on (guard, hi]: values in [1/hi, 1/max(lo, guard+)).
        let lo_x = a.lo.max(guard);
        let upper = if lo_x > guard { lo_x.recip() } else { guard_value };
        add(Interval::new(a.hi.recip(), upper));
    }
    if a.lo < -guard {
        let hi_x = a.hi.min(-guard);
        let lower = if hi_x < -guard { hi_x.recip() } else { -guard_value };
        add(Interval::new(lower, a.lo.recip()));
    }
    piece.expect("operand interval is non-empty")
}

/// Interval bound of an expression over the domain box; ±literals contribute
/// their sign hull `[-|v|, |v|]`.
pub fn expr_interval<T: Scalar>(expr: &Expr<T>, domain: &[Interval<T>]) -> Interval<T> {
    match expr {
        Expr::Var(i) => domain[*i],
        Expr::Const { value, sign_slot } => match sign_slot {
            Some(_) => Interval::new(-value.abs(), value.abs()),
            None => Interval::point(*value),
        },
        Expr::Call { op, args } => {
            let arg_ivs: Vec<Interval<T>> = args.iter().map(|a| expr_interval(a, domain)).collect();
            op_interval(*op, &arg_ivs)
        }
    }
}

/// All values a variable-free subtree can take across its 2^k literal sign
/// assignments; `None` if the subtree reads state or k is too large.
fn enumerate_constant_values<T: Scalar>(expr: &Expr<T>) -> Option<Vec<T>> {
    if !expr.is_constant() {
        return None;
    }
    let slots: Vec<usize> = expr.sign_slots().into_iter().collect();
    if slots.len() > MAX_ENUMERATED_SLOTS {
        return None;
    }
    let mut values = Vec::with_capacity(1 << slots.len());
    for mask in 0..(1_u64 << slots.len()) {
        let mut sign_of = |slot: usize| {
            let bit = slots.iter().position(|&s| s == slot).expect("slot collected");
            mask & (1 << bit) == 0
        };
        values.push(expr.eval(&[], &mut sign_of));
    }
    Some(values)
}

/// (min, max) the test expression can reach over states and sign choices.
fn value_range<T: Scalar>(expr: &Expr<T>, domain: &[Interval<T>]) -> (T, T) {
    if let Some(values) = enumerate_constant_values(expr) {
        let mut lo = values[0];
        let mut hi = values[0];
        for &v in &values[1..] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    } else {
        let iv = expr_interval(expr, domain);
        (iv.lo, iv.hi)
    }
}

/// Simplify an expression over a per-dimension domain box.
pub fn simplify<T: Scalar>(expr: &Expr<T>, domain: &[Interval<T>]) -> Expr<T> {
    match expr {
        Expr::Var(_) | Expr::Const { .. } => expr.clone(),
        Expr::Call { op, args } => {
            let args: Vec<Expr<T>> = args.iter().map(|a| simplify(a, domain)).collect();
            if *op == Op::Select {
                let (lo, hi) = value_range(&args[0], domain);
                if lo > T::zero() {
                    return args[1].clone();
                }
                if hi <= T::zero() {
                    return args[2].clone();
                }
            }
            let node = Expr::Call { op: *op, args };
            if let Some(values) = enumerate_constant_values(&node) {
                let first = values[0];
                if values.iter().all(|&v| v == first) {
                    return Expr::constant(first);
                }
            }
            node
        }
    }
}

/// Convenience: the same interval for every state dimension.
pub fn uniform_domain<T: Scalar>(dim: usize, lo: T, hi: T) -> Vec<Interval<T>> {
    vec![Interval::new(lo, hi); dim]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::expr::{render_listing, to_expression};
    use crate::program::genome::Genome;
    use crate::rng::{stream, StreamId};

    /// Integer gene whose modal cast is operator `op`.
    fn g(op: Op) -> f64 {
        -(op.index() as f64) - 1.0
    }

    fn listing(genomes: &[Genome<f64>], domain: Option<&[Interval<f64>]>) -> String {
        let exprs: Vec<Option<Expr<f64>>> = genomes
            .iter()
            .map(|gn| {
                to_expression(gn, 2).map(|e| match domain {
                    Some(d) => simplify(&e, d),
                    None => e,
                })
            })
            .collect();
        render_listing(&exprs)
    }

    /// Second fixture program: a select with a constant abs() test folds to
    /// its then-branch; the other dimension is irreducible.
    #[test]
    fn fixture_program_two() {
        let a0 = Genome::new(vec![
            g(Op::Cos),
            g(Op::NegCos),
            66.31885466661134,
            g(Op::Abs),
            g(Op::Select),
        ]);
        let a1 = Genome::new(vec![
            g(Op::NegSqrt),
            g(Op::Cos),
            g(Op::Max),
            g(Op::Cos),
            g(Op::NegAbs),
        ]);
        let genomes = [a0, a1];
        assert_eq!(
            listing(&genomes, None),
            "a[0] = -cos(cos(x[1])) if abs(\u{b1}66.31885466661134) > 0 else x[0]\n\
             a[1] = -abs(cos(max(cos(-sqrt(x[1])), x[0])))"
        );
        let domain = uniform_domain(2, -1.0, 1.0);
        assert_eq!(
            listing(&genomes, Some(&domain)),
            "a[0] = -cos(cos(x[1]))\n\
             a[1] = -abs(cos(max(cos(-sqrt(x[1])), x[0])))"
        );
    }

    /// Fourth fixture program: the test is exp(±64.19...), which is not
    /// sign-independent (e^10 vs e^-64) but is strictly positive either way.
    #[test]
    fn fixture_program_four() {
        let a0 = Genome::new(vec![
            g(Op::Cos),
            g(Op::NegCos),
            64.18861262866074,
            g(Op::Exp),
            g(Op::Select),
        ]);
        let a1 = Genome::new(vec![
            g(Op::NegSqrt),
            g(Op::Cos),
            g(Op::Max),
            g(Op::Cos),
            g(Op::Neg),
        ]);
        let genomes = [a0, a1];
        assert_eq!(
            listing(&genomes, None),
            "a[0] = -cos(cos(x[1])) if exp(\u{b1}64.18861262866074) > 0 else x[0]\n\
             a[1] = neg(cos(max(cos(-sqrt(x[1])), x[0])))"
        );
        let domain = uniform_domain(2, -1.0, 1.0);
        assert_eq!(
            listing(&genomes, Some(&domain)),
            "a[0] = -cos(cos(x[1]))\n\
             a[1] = neg(cos(max(cos(-sqrt(x[1])), x[0])))"
        );
    }

    #[test]
    fn constant_only_tree_folds_to_a_number() {
        let tree = Expr::Call {
            op: Op::Add,
            args: vec![
                Expr::Call {
                    op: Op::Sin,
                    args: vec![Expr::constant(2.0_f64)],
                },
                Expr::constant(3.0_f64),
            ],
        };
        let simplified = simplify(&tree, &uniform_domain(2, 0.0, 1.0));
        assert_eq!(simplified, Expr::constant(2.0_f64.sin() + 3.0));
        assert_eq!(simplified.render(), "3.909297426825682");
    }

    #[test]
    fn state_dependent_positive_test_eliminates_via_intervals() {
        // exp(x[1]) >= e^0 > 0 on [0,1] even though the test reads state.
        let genome = Genome::new(vec![g(Op::Exp), g(Op::Select)]);
        let tree = to_expression(&genome, 2).unwrap();
        assert_eq!(tree.render(), "x[0] if exp(x[1]) > 0 else x[1]");
        let simplified = simplify(&tree, &uniform_domain(2, 0.0, 1.0));
        assert_eq!(simplified.render(), "x[0]");
    }

    #[test]
    fn undecidable_test_is_kept() {
        let genome = Genome::new(vec![g(Op::Trunc), g(Op::Select)]);
        let tree = to_expression(&genome, 2).unwrap();
        // trunc(x[1]) spans {-1, 0, 1} on [-1, 1]: neither branch is provable.
        let simplified = simplify(&tree, &uniform_domain(2, -1.0, 1.0));
        assert_eq!(simplified, tree);
    }

    #[test]
    fn sign_dependent_constants_do_not_fold() {
        // exp(±1) is {e, 1/e}: must stay a tree, not a bogus constant.
        let genome = Genome::new(vec![1.0, g(Op::Exp)]);
        let tree = to_expression(&genome, 2).unwrap();
        let simplified = simplify(&tree, &uniform_domain(2, 0.0, 1.0));
        assert_eq!(simplified, tree);
    }

    #[test]
    fn interval_bounds_contain_sampled_values() {
        let mut rng = stream(31, StreamId::Evolution);
        let domain = uniform_domain(2, 0.0, 1.0);
        for _ in 0..2_000 {
            let genome = Genome::<f64>::random(5, 10.0, &mut rng);
            let tree = to_expression(&genome, 2).unwrap();
            let iv = expr_interval(&tree, &domain);
            assert!(iv.lo <= iv.hi);
            let slots: Vec<usize> = tree.sign_slots().into_iter().collect();
            for gx in 0..5 {
                for gy in 0..5 {
                    let state = [gx as f64 / 4.0, gy as f64 / 4.0];
                    for mask in 0..(1_u32 << slots.len()) {
                        let mut sign_of = |slot: usize| {
                            let bit = slots.iter().position(|&s| s == slot).unwrap();
                            mask & (1 << bit) == 0
                        };
                        let v = tree.eval(&state, &mut sign_of);
                        assert!(
                            iv.contains(v),
                            "value {v} outside [{}, {}] for {}",
                            iv.lo,
                            iv.hi,
                            tree.render()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn simplification_is_semantics_preserving_on_random_programs() {
        let mut rng = stream(32, StreamId::Evolution);
        let domain = uniform_domain(2, 0.0, 1.0);
        for _ in 0..500 {
            let genome = Genome::<f64>::random(5, 10.0, &mut rng);
            let tree = to_expression(&genome, 2).unwrap();
            let simplified = simplify(&tree, &domain);
            let slots: Vec<usize> = tree.sign_slots().into_iter().collect();
            for gx in 0..8 {
                for gy in 0..8 {
                    let state = [gx as f64 / 7.0, gy as f64 / 7.0];
                    for mask in 0..(1_u32 << slots.len()) {
                        let mut sign_a = |slot: usize| {
                            let bit = slots.iter().position(|&s| s == slot).unwrap();
                            mask & (1 << bit) == 0
                        };
                        let mut sign_b = |slot: usize| {
                            let bit = slots.iter().position(|&s| s == slot).unwrap();
                            mask & (1 << bit) == 0
                        };
                        let a = tree.eval(&state, &mut sign_a);
                        let b = simplified.eval(&state, &mut sign_b);
                        assert!(
                            (a - b).abs() < 1e-9,
                            "{} vs {} on {:?}",
                            tree.render(),
                            simplified.render(),
                            state
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn reciprocal_interval_pieces() {
        // Entirely inside the guard band.
        assert_eq!(
            reciprocal_interval(Interval::new(-0.04_f64, 0.03)),
            Interval::point(20.0)
        );
        // Entirely positive outside the band: plain 1/x, decreasing.
        assert_eq!(
            reciprocal_interval(Interval::new(0.5_f64, 2.0)),
            Interval::new(0.5, 2.0)
        );
        // Straddling: hull of the guard value and both hyperbola branches.
        let iv = reciprocal_interval(Interval::new(-1.0_f64, 1.0));
        assert_eq!(iv, Interval::new(-20.0, 20.0));
        // Negative side only.
        let neg = reciprocal_interval(Interval::new(-2.0_f64, -0.5));
        assert_eq!(neg, Interval::new(-2.0, -0.5));
    }
}
