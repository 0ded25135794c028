//! Symbolic form of a program: the deterministic (modal) decode of a genome
//! as an expression tree, plus rendering and linearization.
//!
//! Call arguments are stored in pop order (`args[0]` came off the stack
//! top), matching the operand convention of [`Op::apply`]. Literals keep the
//! index of the gene they came from as a "sign slot": the runtime sign of
//! that literal is unresolved in the tree, rendered as `±v`, and supplied per
//! slot when evaluating.

use std::collections::BTreeSet;

use super::genome::{modal_token, Genome, Token};
use super::ops::Op;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T> {
    /// State variable `x[i]`.
    Var(usize),
    /// Literal magnitude; `sign_slot` identifies the originating gene, or is
    /// `None` once a simplification has pinned the value exactly.
    Const { value: T, sign_slot: Option<usize> },
    Call { op: Op, args: Vec<Expr<T>> },
}

impl<T: Scalar> Expr<T> {
    /// Sign-fixed constant (no ± marker).
    pub fn constant(value: T) -> Self {
        Expr::Const {
            value,
            sign_slot: None,
        }
    }

    /// Evaluate with literal signs chosen by `sign_of(slot)` (`true` = `+`).
    /// Slot-free constants use their value as-is.
    pub fn eval(&self, state: &[T], sign_of: &mut impl FnMut(usize) -> bool) -> T {
        match self {
            Expr::Var(i) => state[*i],
            Expr::Const { value, sign_slot } => match sign_slot {
                Some(slot) if !sign_of(*slot) => -*value,
                _ => *value,
            },
            Expr::Call { op, args } => {
                let operands: Vec<T> = args.iter().map(|a| a.eval(state, sign_of)).collect();
                op.apply(&operands)
            }
        }
    }

    /// Evaluate with every literal sign positive — the reading a rendered
    /// listing suggests when ± markers are dropped.
    pub fn eval_positive(&self, state: &[T]) -> T {
        self.eval(state, &mut |_| true)
    }

    /// Distinct state variables read by the expression.
    pub fn state_vars(&self) -> BTreeSet<usize> {
        let mut vars = BTreeSet::new();
        self.collect_vars(&mut vars);
        vars
    }

    fn collect_vars(&self, into: &mut BTreeSet<usize>) {
        match self {
            Expr::Var(i) => {
                into.insert(*i);
            }
            Expr::Const { .. } => {}
            Expr::Call { args, .. } => {
                for a in args {
                    a.collect_vars(into);
                }
            }
        }
    }

    /// Sign slots of all ±literals in the subtree.
    pub fn sign_slots(&self) -> BTreeSet<usize> {
        let mut slots = BTreeSet::new();
        self.collect_slots(&mut slots);
        slots
    }

    fn collect_slots(&self, into: &mut BTreeSet<usize>) {
        match self {
            Expr::Var(_) => {}
            Expr::Const { sign_slot, .. } => {
                if let Some(s) = sign_slot {
                    into.insert(*s);
                }
            }
            Expr::Call { args, .. } => {
                for a in args {
                    a.collect_slots(into);
                }
            }
        }
    }

    /// True when the subtree reads no state variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Var(_) => false,
            Expr::Const { .. } => true,
            Expr::Call { args, .. } => args.iter().all(Expr::is_constant),
        }
    }

    /// Infix rendering in listing style: unary and max/min are call-like,
    /// `+`/`*` are parenthesized infix, select is a conditional expression.
    /// The root drops its own surrounding parentheses.
    pub fn render(&self) -> String {
        self.render_part(true)
    }

    fn render_part(&self, root: bool) -> String {
        match self {
            Expr::Var(i) => format!("x[{i}]"),
            Expr::Const { value, sign_slot } => match sign_slot {
                Some(_) => format!("\u{b1}{value}"),
                None => format!("{value}"),
            },
            Expr::Call { op, args } => match op {
                Op::Add | Op::Mul => {
                    let body =
                        format!("{} {} {}", args[0].render_part(false), op, args[1].render_part(false));
                    if root {
                        body
                    } else {
                        format!("({body})")
                    }
                }
                Op::Select => {
                    let body = format!(
                        "{} if {} > 0 else {}",
                        args[1].render_part(false),
                        args[0].render_part(false),
                        args[2].render_part(false)
                    );
                    if root {
                        body
                    } else {
                        format!("({body})")
                    }
                }
                Op::Max | Op::Min => format!(
                    "{}({}, {})",
                    op,
                    args[0].render_part(false),
                    args[1].render_part(false)
                ),
                _ => format!("{}({})", op, args[0].render_part(false)),
            },
        }
    }

    /// Linearize back to postfix tokens (push order: arguments reversed,
    /// then the operator). State variables come from the stack prefill, not
    /// from tokens, so they emit nothing.
    pub fn to_postfix(&self) -> Vec<Token<T>> {
        let mut out = Vec::new();
        self.emit_postfix(&mut out);
        out
    }

    fn emit_postfix(&self, out: &mut Vec<Token<T>>) {
        match self {
            Expr::Var(_) => {}
            Expr::Const { value, .. } => out.push(Token::Literal(*value)),
            Expr::Call { op, args } => {
                for a in args.iter().rev() {
                    a.emit_postfix(out);
                }
                out.push(Token::Operator(*op));
            }
        }
    }
}

/// Deterministic decode of a genome into an expression tree, mirroring the
/// prefilled stack machine symbolically. `None` on symbolic underflow.
pub fn to_expression<T: Scalar>(genome: &Genome<T>, state_dim: usize) -> Option<Expr<T>> {
    use super::exec::STACK_PREFILL_REPEATS;

    let mut real: Vec<Expr<T>> = Vec::new();
    let mut virt = STACK_PREFILL_REPEATS * state_dim;

    for (slot, &gene) in genome.genes().iter().enumerate() {
        match modal_token(gene) {
            Token::Literal(magnitude) => real.push(Expr::Const {
                value: magnitude,
                sign_slot: Some(slot),
            }),
            Token::Operator(op) => {
                let mut args = Vec::with_capacity(op.arity());
                for _ in 0..op.arity() {
                    let arg = if let Some(e) = real.pop() {
                        e
                    } else if virt > 0 {
                        virt -= 1;
                        Expr::Var(virt % state_dim)
                    } else {
                        return None;
                    };
                    args.push(arg);
                }
                real.push(Expr::Call { op, args });
            }
        }
    }

    if let Some(top) = real.pop() {
        Some(top)
    } else if virt > 0 {
        Some(Expr::Var((virt - 1) % state_dim))
    } else {
        None
    }
}

/// One listing line per action dimension: `a[k] = <expr>` (or `invalid` for
/// programs whose symbolic decode underflows).
pub fn render_listing<T: Scalar>(exprs: &[Option<Expr<T>>]) -> String {
    exprs
        .iter()
        .enumerate()
        .map(|(k, e)| match e {
            Some(expr) => format!("a[{k}] = {}", expr.render()),
            None => format!("a[{k}] = invalid"),
        })
        .collect::<Vec<_>>()
        .join("\n")
}
