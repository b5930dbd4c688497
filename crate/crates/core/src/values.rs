//! Tracked value types: annotated integers and FLOP-charging floats.

use std::fmt;

use thiserror::Error;

use crate::runtime::Context;
use crate::term::{Assignment, Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow in {0} configuration")]
    Overflow(&'static str),
    #[error("input `{name}`: large value {large} is smaller than small value {small}")]
    InvalidInputConfiguration { name: String, small: i64, large: i64 },
    #[error("input `{name}`: negative size {small}")]
    NegativeInput { name: String, small: i64 },
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn apply<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FloatOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Annotation-loss events produced by integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumWarning {
    /// Integer division truncated a component, so the exact term no longer
    /// reproduces the concrete values.
    Truncation,
    /// `%` has no rational-function form; the term fell back to a constant.
    LossyModulo,
}

/// Integer carrying its concrete value, its symbolic origin and its value
/// under the large configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Num {
    pub small: i64,
    pub term: Term,
    pub large: i64,
}

impl Num {
    pub fn literal(c: i64) -> Num {
        Num {
            small: c,
            term: Term::int(c),
            large: c,
        }
    }

    pub fn input(name: &str, small: i64, large: i64) -> Result<Num, ValueError> {
        if small < 0 {
            return Err(ValueError::NegativeInput {
                name: name.to_string(),
                small,
            });
        }
        if large < small {
            return Err(ValueError::InvalidInputConfiguration {
                name: name.to_string(),
                small,
                large,
            });
        }
        Ok(Num {
            small,
            term: Term::var(name)?,
            large,
        })
    }

    /// True when the term reproduces both concrete components. Values whose
    /// term does not evaluate to an integer are vacuously consistent.
    pub fn is_consistent(&self, small: &Assignment, large: &Assignment) -> bool {
        let check = |values: &Assignment, expect: i64| match self.term.eval(values) {
            Ok(v) if v.is_integer() => v == crate::term::rational(expect),
            _ => true,
        };
        check(small, self.small) && check(large, self.large)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.small, self.term, self.large)
    }
}

fn int_apply(op: IntOp, a: i64, b: i64, side: &'static str) -> Result<i64, ValueError> {
    let r = match op {
        IntOp::Add => a.checked_add(b),
        IntOp::Sub => a.checked_sub(b),
        IntOp::Mul => a.checked_mul(b),
        IntOp::Div | IntOp::Mod if b == 0 => return Err(ValueError::DivisionByZero),
        IntOp::Div => a.checked_div(b),
        IntOp::Mod => a.checked_rem(b),
    };
    r.ok_or(ValueError::Overflow(side))
}

/// Plain 64-bit integer arithmetic with the same error behavior as the
/// tracked path.
pub fn plain_binop(op: IntOp, a: i64, b: i64) -> Result<i64, ValueError> {
    int_apply(op, a, b, "small")
}

/// Componentwise arithmetic on tracked integers.
pub fn num_binop(op: IntOp, a: &Num, b: &Num) -> Result<(Num, Option<NumWarning>), ValueError> {
    let small = int_apply(op, a.small, b.small, "small")?;
    let large = int_apply(op, a.large, b.large, "large")?;
    let (term, warning) = match op {
        IntOp::Add => (&a.term + &b.term, None),
        IntOp::Sub => (&a.term - &b.term, None),
        IntOp::Mul => (&a.term * &b.term, None),
        IntOp::Div => {
            let truncated = a.small % b.small != 0 || a.large % b.large != 0;
            (
                a.term.checked_div(&b.term)?,
                truncated.then_some(NumWarning::Truncation),
            )
        }
        IntOp::Mod => (Term::int(small), Some(NumWarning::LossyModulo)),
    };
    Ok((Num { small, term, large }, warning))
}

/// Outcome of comparing tracked integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    /// The decision, taken on the large components.
    pub result: bool,
    /// What the small components alone would have decided.
    pub small_result: bool,
    /// Large components tie while small components differ.
    pub ambiguous: bool,
}

impl Comparison {
    pub fn diverges(&self) -> bool {
        self.result != self.small_result
    }
}

/// Terms have no total order, so comparisons use the large configuration.
pub fn num_compare(op: CmpOp, a: &Num, b: &Num) -> Comparison {
    Comparison {
        result: op.apply(a.large, b.large),
        small_result: op.apply(a.small, b.small),
        ambiguous: a.large == b.large && a.small != b.small,
    }
}

/// Floating-point value whose arithmetic cost is counted.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct TrackedFloat(pub f64);

impl TrackedFloat {
    pub fn apply(op: FloatOp, a: TrackedFloat, b: TrackedFloat) -> TrackedFloat {
        TrackedFloat(match op {
            FloatOp::Add => a.0 + b.0,
            FloatOp::Sub => a.0 - b.0,
            FloatOp::Mul => a.0 * b.0,
            FloatOp::Div => a.0 / b.0,
        })
    }
}

/// Performs the operation and charges one FLOP to `ctx`.
pub fn float_binop(op: FloatOp, a: TrackedFloat, b: TrackedFloat, ctx: &mut Context) -> TrackedFloat {
    ctx.charge_flops(1);
    TrackedFloat::apply(op, a, b)
}

/// IEEE comparison; free of charge.
pub fn float_compare(op: CmpOp, a: TrackedFloat, b: TrackedFloat) -> bool {
    op.apply(a.0, b.0)
}
