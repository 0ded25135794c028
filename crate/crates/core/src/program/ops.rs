//! The fixed operator table shared by the stack VM, the expression renderer
//! and the simplifier.
//!
//! Every operator is total over the reals: partial functions get explicit
//! domain guards so no input a genome can produce ever yields NaN or ±inf.
//! The index order is frozen — serialized genomes depend on it.

use crate::scalar::{cast, Scalar};

/// Operators addressable by a gene. `Neg*` variants negate the base result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Op {
    Abs = 0,
    NegAbs = 1,
    Sin = 2,
    NegSin = 3,
    Cos = 4,
    NegCos = 5,
    Exp = 6,
    NegExp = 7,
    Sqrt = 8,
    NegSqrt = 9,
    Neg = 10,
    Add = 11,
    Mul = 12,
    Select = 13,
    Max = 14,
    Min = 15,
    Id = 16,
    Reciprocal = 17,
    Trunc = 18,
}

/// Number of operators; genes in `]-OPERATOR_COUNT, literal_max]` can address
/// the whole table.
pub const OPERATOR_COUNT: usize = 19;

/// `reciprocal` returns [`RECIPROCAL_GUARD_VALUE`] when `|x|` is at most this.
pub const RECIPROCAL_GUARD: f64 = 0.05;
/// Substitute for `1/x` near the pole.
pub const RECIPROCAL_GUARD_VALUE: f64 = 20.0;
/// `exp` clamps its argument to this before exponentiating.
pub const EXP_ARG_MAX: f64 = 10.0;
/// `trunc` saturates at ±2^63.
pub const TRUNC_SATURATION: f64 = 9_223_372_036_854_775_808.0;

impl Op {
    /// All operators in index order.
    pub const ALL: [Op; OPERATOR_COUNT] = [
        Op::Abs,
        Op::NegAbs,
        Op::Sin,
        Op::NegSin,
        Op::Cos,
        Op::NegCos,
        Op::Exp,
        Op::NegExp,
        Op::Sqrt,
        Op::NegSqrt,
        Op::Neg,
        Op::Add,
        Op::Mul,
        Op::Select,
        Op::Max,
        Op::Min,
        Op::Id,
        Op::Reciprocal,
        Op::Trunc,
    ];

    /// Table index of this operator.
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Operator at `index`, or `None` past the table.
    #[inline]
    pub fn from_index(index: usize) -> Option<Op> {
        Op::ALL.get(index).copied()
    }

    /// Number of operands popped from the stack.
    #[inline]
    pub fn arity(self) -> usize {
        match self {
            Op::Add | Op::Mul | Op::Max | Op::Min => 2,
            Op::Select => 3,
            _ => 1,
        }
    }

    /// Name used in rendered listings.
    pub fn name(self) -> &'static str {
        match self {
            Op::Abs => "abs",
            Op::NegAbs => "-abs",
            Op::Sin => "sin",
            Op::NegSin => "-sin",
            Op::Cos => "cos",
            Op::NegCos => "-cos",
            Op::Exp => "exp",
            Op::NegExp => "-exp",
            Op::Sqrt => "sqrt",
            Op::NegSqrt => "-sqrt",
            Op::Neg => "neg",
            Op::Add => "+",
            Op::Mul => "*",
            Op::Select => "select",
            Op::Max => "max",
            Op::Min => "min",
            Op::Id => "id",
            Op::Reciprocal => "reciprocal",
            Op::Trunc => "trunc",
        }
    }

    /// Apply to operands given in pop order (`operands[0]` was the stack top).
    ///
    /// Finite inputs always produce a finite output. `select` returns its
    /// second operand when the first is strictly positive, else the third.
    #[inline]
    pub fn apply<T: Scalar>(self, operands: &[T]) -> T {
        debug_assert_eq!(operands.len(), self.arity());
        let x = operands[0];
        match self {
            Op::Abs => x.abs(),
            Op::NegAbs => -x.abs(),
            Op::Sin => x.sin(),
            Op::NegSin => -x.sin(),
            Op::Cos => x.cos(),
            Op::NegCos => -x.cos(),
            Op::Exp => clamped_exp(x),
            Op::NegExp => -clamped_exp(x),
            Op::Sqrt => guarded_sqrt(x),
            Op::NegSqrt => -guarded_sqrt(x),
            Op::Neg => -x,
            Op::Add => x + operands[1],
            Op::Mul => x * operands[1],
            Op::Select => {
                if x > T::zero() {
                    operands[1]
                } else {
                    operands[2]
                }
            }
            Op::Max => x.max(operands[1]),
            Op::Min => x.min(operands[1]),
            Op::Id => x,
            Op::Reciprocal => guarded_reciprocal(x),
            Op::Trunc => saturating_trunc(x),
        }
    }
}

impl std::fmt::Display for Op {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[inline]
fn clamped_exp<T: Scalar>(x: T) -> T {
    x.min(cast(EXP_ARG_MAX)).exp()
}

#[inline]
fn guarded_sqrt<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        T::zero()
    } else {
        x.sqrt()
    }
}

#[inline]
fn guarded_reciprocal<T: Scalar>(x: T) -> T {
    if x.abs() <= cast(RECIPROCAL_GUARD) {
        cast(RECIPROCAL_GUARD_VALUE)
    } else {
        x.recip()
    }
}

#[inline]
fn saturating_trunc<T: Scalar>(x: T) -> T {
    let sat = cast::<T>(TRUNC_SATURATION);
    if x >= sat {
        sat
    } else if x <= -sat {
        -sat
    } else {
        x.trunc()
    }
}
