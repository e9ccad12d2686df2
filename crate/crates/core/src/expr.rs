//! Constraint syntax trees and the three-valued ground evaluator that
//! defines what a correct answer is.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::arith::{self, ArithError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Rem,
    Min,
    Max,
}

impl BinOp {
    pub const ALL: [BinOp; 8] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
        BinOp::Rem,
        BinOp::Min,
        BinOp::Max,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::Rem => "rem",
            BinOp::Min => "min",
            BinOp::Max => "max",
        }
    }

    /// `min`/`max` are written in call syntax.
    pub fn is_functional(self) -> bool {
        matches!(self, BinOp::Min | BinOp::Max)
    }
}

/// Arithmetic expression. Negation is not a separate node: `-E` is built
/// as `0 - E` (or a negative literal) by [`Expr::neg`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Var(String),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn abs(a: Expr) -> Expr {
        Expr::Abs(Box::new(a))
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Int(n) if n != i64::MIN => Expr::Int(-n),
            other => Expr::bin(BinOp::Sub, Expr::Int(0), other),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Expr::Int(_) | Expr::Var(_))
    }

    pub fn is_compound(&self) -> bool {
        !self.is_leaf()
    }

    /// Variable names in left-to-right order of occurrence (with repeats).
    pub fn visit_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(name) => out.push(name),
            Expr::Binary(_, a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
            Expr::Abs(a) => a.visit_vars(out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    pub const ALL: [Rel; 6] = [Rel::Eq, Rel::Neq, Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "#=",
            Rel::Neq => "#\\=",
            Rel::Lt => "#<",
            Rel::Le => "#=<",
            Rel::Gt => "#>",
            Rel::Ge => "#>=",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Rel::Eq => a == b,
            Rel::Neq => a != b,
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Gt => a > b,
            Rel::Ge => a >= b,
        }
    }

    /// The relation that holds exactly when `self` does not.
    pub fn negate(self) -> Rel {
        match self {
            Rel::Eq => Rel::Neq,
            Rel::Neq => Rel::Eq,
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolTerm {
    Var(String),
    Const(bool),
    Rel(Rel, Expr, Expr),
}

/// A reification connective between two Boolean terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ReifConstraint {
    /// `#<==>`
    Iff(BoolTerm, BoolTerm),
    /// `#==>`; `A #<== B` is read as `B #==> A`.
    Impl(BoolTerm, BoolTerm),
}

impl ReifConstraint {
    pub fn sides(&self) -> (&BoolTerm, &BoolTerm) {
        match self {
            ReifConstraint::Iff(a, b) | ReifConstraint::Impl(a, b) => (a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroundResult {
    Value(i64),
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable {0} has no value")]
    Unbound(String),
    #[error("integer overflow during evaluation")]
    Overflow,
}

pub type Assignment = HashMap<String, i64>;

/// Evaluates `e` under `asg`; any division, `mod` or `rem` by zero makes
/// the whole expression undefined.
pub fn eval_ground(e: &Expr, asg: &Assignment) -> Result<GroundResult, EvalError> {
    use GroundResult::*;
    Ok(match e {
        Expr::Int(n) => Value(*n),
        Expr::Var(name) => Value(*asg.get(name).ok_or_else(|| EvalError::Unbound(name.clone()))?),
        Expr::Abs(a) => match eval_ground(a, asg)? {
            Value(v) => Value(v.checked_abs().ok_or(EvalError::Overflow)?),
            Undefined => Undefined,
        },
        Expr::Binary(op, a, b) => {
            let (a, b) = match (eval_ground(a, asg)?, eval_ground(b, asg)?) {
                (Value(a), Value(b)) => (a, b),
                _ => return Ok(Undefined),
            };
            let checked = |r: Option<i64>| r.ok_or(EvalError::Overflow);
            let divide = |r: Result<i64, ArithError>| match r {
                Ok(v) => Ok(Value(v)),
                Err(ArithError::DivisionByZero) => Ok(Undefined),
                Err(ArithError::Overflow) => Err(EvalError::Overflow),
            };
            match op {
                BinOp::Add => Value(checked(a.checked_add(b))?),
                BinOp::Sub => Value(checked(a.checked_sub(b))?),
                BinOp::Mul => Value(checked(a.checked_mul(b))?),
                BinOp::Min => Value(a.min(b)),
                BinOp::Max => Value(a.max(b)),
                BinOp::Div => divide(arith::div(a, b))?,
                BinOp::Mod => divide(arith::modulo(a, b))?,
                BinOp::Rem => divide(arith::rem(a, b))?,
            }
        }
    })
}

/// Truth value of `a rel b`: false whenever either side is undefined.
pub fn eval_rel(rel: Rel, a: &Expr, b: &Expr, asg: &Assignment) -> Result<bool, EvalError> {
    Ok(match (eval_ground(a, asg)?, eval_ground(b, asg)?) {
        (GroundResult::Value(x), GroundResult::Value(y)) => rel.holds(x, y),
        _ => false,
    })
}

/// Truth value of a Boolean term, or `None` if a Boolean variable holds
/// something other than 0 or 1.
pub fn eval_bool_term(t: &BoolTerm, asg: &Assignment) -> Result<Option<bool>, EvalError> {
    Ok(match t {
        BoolTerm::Const(b) => Some(*b),
        BoolTerm::Var(name) => match asg.get(name) {
            Some(0) => Some(false),
            Some(1) => Some(true),
            Some(_) => None,
            None => return Err(EvalError::Unbound(name.clone())),
        },
        BoolTerm::Rel(rel, a, b) => Some(eval_rel(*rel, a, b, asg)?),
    })
}

/// Whether the reified constraint is satisfied by a complete assignment.
pub fn eval_reif(c: &ReifConstraint, asg: &Assignment) -> Result<bool, EvalError> {
    let (l, r) = c.sides();
    let (Some(l), Some(r)) = (eval_bool_term(l, asg)?, eval_bool_term(r, asg)?) else {
        return Ok(false);
    };
    Ok(match c {
        ReifConstraint::Iff(..) => l == r,
        ReifConstraint::Impl(..) => !l || r,
    })
}

impl fmt::Display for Expr {
    /// Compound operands and negative literals are parenthesized, so the
    /// output reparses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                Expr::Int(n) if *n < 0 => write!(f, "({n})"),
                Expr::Binary(op, ..) if !op.is_functional() => write!(f, "({e})"),
                _ => write!(f, "{e}"),
            }
        }
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Binary(op, a, b) if op.is_functional() => {
                write!(f, "{}({a}, {b})", op.symbol())
            }
            Expr::Binary(op, a, b) => {
                operand(a, f)?;
                write!(f, " {} ", op.symbol())?;
                operand(b, f)
            }
        }
    }
}

impl fmt::Display for BoolTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolTerm::Var(name) => f.write_str(name),
            BoolTerm::Const(b) => write!(f, "{}", u8::from(*b)),
            BoolTerm::Rel(rel, a, b) => write!(f, "({a} {rel} {b})"),
        }
    }
}

impl fmt::Display for ReifConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReifConstraint::Iff(a, b) => write!(f, "{a} #<==> {b}"),
            ReifConstraint::Impl(a, b) => write!(f, "{a} #==> {b}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asg(pairs: &[(&str, i64)]) -> Assignment {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    fn x() -> Expr {
        Expr::var("X")
    }

    #[test]
    fn division_by_zero_is_undefined() {
        let e = Expr::bin(BinOp::Div, x(), Expr::Int(0));
        assert_eq!(eval_ground(&e, &asg(&[("X", 7)])), Ok(GroundResult::Undefined));
        // undefinedness is absorbing
        let outer = Expr::abs(Expr::bin(BinOp::Add, e, Expr::Int(1)));
        assert_eq!(eval_ground(&outer, &asg(&[("X", 7)])), Ok(GroundResult::Undefined));
    }

    #[test]
    fn ground_values() {
        let e = Expr::abs(Expr::bin(BinOp::Sub, Expr::Int(3), Expr::Int(5)));
        assert_eq!(eval_ground(&e, &Assignment::new()), Ok(GroundResult::Value(2)));
        let m = Expr::bin(BinOp::Mod, Expr::Int(-7), Expr::Int(2));
        let r = Expr::bin(BinOp::Rem, Expr::Int(-7), Expr::Int(2));
        assert_eq!(eval_ground(&m, &Assignment::new()), Ok(GroundResult::Value(1)));
        assert_eq!(eval_ground(&r, &Assignment::new()), Ok(GroundResult::Value(-1)));
    }

    #[test]
    fn relations_with_undefined_sides_are_false() {
        let div0 = |v: &str| Expr::bin(BinOp::Div, Expr::var(v), Expr::Int(0));
        let a = asg(&[("X", 1), ("Y", 1)]);
        assert_eq!(eval_rel(Rel::Eq, &div0("X"), &div0("Y"), &a), Ok(false));
        assert_eq!(eval_rel(Rel::Le, &Expr::Int(2), &Expr::Int(2), &a), Ok(true));
        let m0 = Expr::bin(BinOp::Mod, x(), Expr::Int(0));
        for rel in Rel::ALL {
            assert_eq!(eval_rel(rel, &m0, &Expr::Int(5), &asg(&[("X", 3)])), Ok(false));
        }
    }

    #[test]
    fn eval_errors() {
        assert_eq!(eval_ground(&x(), &Assignment::new()), Err(EvalError::Unbound("X".into())));
        let big = Expr::bin(BinOp::Mul, Expr::Int(i64::MAX), Expr::Int(2));
        assert_eq!(eval_ground(&big, &Assignment::new()), Err(EvalError::Overflow));
    }

    #[test]
    fn oracle_totality() {
        let ops = BinOp::ALL;
        for op in ops {
            let e = Expr::bin(op, x(), Expr::var("Y"));
            for a in -4..=4 {
                for b in -4..=4 {
                    for rel in Rel::ALL {
                        assert!(eval_rel(rel, &e, &Expr::Int(0), &asg(&[("X", a), ("Y", b)])).is_ok());
                    }
                }
            }
        }
    }

    #[test]
    fn reif_truth() {
        let c = ReifConstraint::Impl(
            BoolTerm::Const(false),
            BoolTerm::Rel(Rel::Eq, Expr::bin(BinOp::Div, x(), Expr::var("Y")), Expr::var("Z")),
        );
        assert_eq!(eval_reif(&c, &asg(&[("X", 1), ("Y", 0), ("Z", 5)])), Ok(true));
        let b = ReifConstraint::Iff(BoolTerm::Var("B".into()), BoolTerm::Const(true));
        assert_eq!(eval_reif(&b, &asg(&[("B", 2)])), Ok(false));
        assert_eq!(eval_reif(&b, &asg(&[("B", 1)])), Ok(true));
    }

    #[test]
    fn negation_normalizes() {
        assert_eq!(Expr::neg(Expr::Int(3)), Expr::Int(-3));
        assert_eq!(Expr::neg(x()), Expr::bin(BinOp::Sub, Expr::Int(0), x()));
    }
}
