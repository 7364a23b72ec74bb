//! Double-double evaluation of `f(x)` and `ln f(x)`.
//!
//! `ln_precise` works in log space where the tree allows it
//! (`ln exp(g) = g`, `ln(uv) = ln u + ln v`, `ln(u^p) = p ln u`, ...), so
//! log-affine and log-polynomial functions get their logarithm without the
//! round trip through `exp` and `ln`.

use super::{BinaryOp, EvalError, Expression, Func, Node};
use crate::dd::{self, Dd};

/// Failure of `ln f(x)`: either `f(x)` itself failed, or it is not positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LnError {
    Eval(EvalError),
    NonPositive(f64),
}

impl From<EvalError> for LnError {
    fn from(e: EvalError) -> Self {
        LnError::Eval(e)
    }
}

impl Expression {
    /// `f(x)` in double-double arithmetic.
    #[cfg(test)]
    pub(crate) fn eval_precise(&self, x: Dd) -> Result<Dd, EvalError> {
        if !x.is_finite() {
            return Err(EvalError::NonFiniteInput(x.to_f64()));
        }
        eval(self.root(), x)
    }

    /// `ln f(x)` in double-double arithmetic; errors when `f(x) ≤ 0`.
    pub(crate) fn ln_precise(&self, x: Dd) -> Result<Dd, LnError> {
        if !x.is_finite() {
            return Err(EvalError::NonFiniteInput(x.to_f64()).into());
        }
        ln(self.root(), x)
    }
}

fn check(op: &'static str, v: Dd) -> Result<Dd, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite { op, value: v.hi })
    }
}

fn integer_exponent(e: Dd) -> Option<i64> {
    (e.lo == 0.0 && e.hi.fract() == 0.0 && e.hi.abs() <= 1024.0).then_some(e.hi as i64)
}

fn pow(base: Dd, exponent: Dd) -> Result<Dd, EvalError> {
    if base.hi == 0.0 {
        return if exponent.hi < 0.0 {
            Err(EvalError::DivisionByZero)
        } else if exponent.hi == 0.0 {
            Ok(Dd::ONE)
        } else {
            Ok(Dd::ZERO)
        };
    }
    if let Some(n) = integer_exponent(exponent) {
        return check("^", base.powi(n));
    }
    let Some(l) = base.ln() else {
        return Err(EvalError::Domain {
            func: "^",
            arg: base.to_f64(),
        });
    };
    check("^", (exponent * l).exp())
}

fn eval(node: &Node, x: Dd) -> Result<Dd, EvalError> {
    match node {
        Node::Number(v) => Ok(Dd::from_f64(*v)),
        Node::Var => Ok(x),
        Node::Const(super::Constant::E) => Ok(dd::E),
        Node::Const(super::Constant::Pi) => Ok(dd::PI),
        Node::Neg(a) => Ok(-eval(a, x)?),
        Node::Binary(op, a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            match op {
                BinaryOp::Add => check("+", a + b),
                BinaryOp::Sub => check("-", a - b),
                BinaryOp::Mul => check("*", a * b),
                BinaryOp::Div => {
                    if b.hi == 0.0 {
                        Err(EvalError::DivisionByZero)
                    } else {
                        check("/", a / b)
                    }
                }
                BinaryOp::Pow => pow(a, b),
            }
        }
        Node::Call(func, arg) => {
            let a = eval(arg, x)?;
            let domain = || EvalError::Domain {
                func: func.name(),
                arg: a.to_f64(),
            };
            let v = match func {
                Func::Exp => a.exp(),
                Func::Ln => a.ln().ok_or_else(domain)?,
                Func::Sqrt => a.sqrt().ok_or_else(domain)?,
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Abs => a.abs(),
            };
            check(func.name(), v)
        }
    }
}

fn ln_of_value(v: Dd) -> Result<Dd, LnError> {
    v.ln().ok_or(LnError::NonPositive(v.to_f64()))
}

fn ln(node: &Node, x: Dd) -> Result<Dd, LnError> {
    match node {
        Node::Call(Func::Exp, g) => Ok(eval(g, x)?),
        Node::Call(Func::Sqrt, g) => {
            let v = eval(g, x)?;
            if v.hi < 0.0 {
                return Err(EvalError::Domain {
                    func: "sqrt",
                    arg: v.to_f64(),
                }
                .into());
            }
            let l = ln(g, x)?;
            Ok(Dd::new(l.hi * 0.5, l.lo * 0.5))
        }
        Node::Const(super::Constant::E) => Ok(Dd::ONE),
        Node::Binary(op @ (BinaryOp::Mul | BinaryOp::Div), a, b) => {
            let (va, vb) = (eval(a, x)?, eval(b, x)?);
            if *op == BinaryOp::Div && vb.hi == 0.0 {
                return Err(EvalError::DivisionByZero.into());
            }
            if va.hi > 0.0 && vb.hi > 0.0 {
                let (la, lb) = (ln(a, x)?, ln(b, x)?);
                Ok(if *op == BinaryOp::Mul { la + lb } else { la - lb })
            } else {
                let v = if *op == BinaryOp::Mul { va * vb } else { va / vb };
                ln_of_value(v)
            }
        }
        Node::Binary(BinaryOp::Pow, base, exponent) => {
            let vb = eval(base, x)?;
            if vb.hi > 0.0 {
                Ok(eval(exponent, x)? * ln(base, x)?)
            } else {
                ln_of_value(pow(vb, eval(exponent, x)?)?)
            }
        }
        _ => ln_of_value(eval(node, x)?),
    }
}
