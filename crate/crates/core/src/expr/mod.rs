//! Univariate real expressions `f(x)`.
//!
//! Grammar (ASCII, whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'x' | 'e' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := exp | ln | sqrt | sin | cos | sinh | cosh | abs
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)` and `2^-x` is
//! `2^(-x)`. `log` is rejected because its base is ambiguous.

mod parser;
mod precise;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parser::ParseError;
pub(crate) use precise::LnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    E,
    Pi,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::E => std::f64::consts::E,
            Constant::Pi => std::f64::consts::PI,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constant::E => "e",
            Constant::Pi => "pi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Syntax tree node. Every variant has the arity of its operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    Var,
    Const(Constant),
    Neg(Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("argument x = {0} is not finite")]
    NonFiniteInput(f64),
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("{op} produced a non-finite value ({value})")]
    NonFinite { op: &'static str, value: f64 },
}

/// An immutable parsed function of `x`.
///
/// Cloning is cheap (the tree is shared); equality is structural and ignores
/// the source text.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Arc<Node>,
    source: Arc<str>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Expression {
    pub fn parse(text: &str) -> Result<Expression, ParseError> {
        let root = parser::parse(text)?;
        Ok(Expression {
            root: Arc::new(root),
            source: Arc::from(text.trim()),
        })
    }

    pub fn from_node(root: Node) -> Expression {
        let source: Arc<str> = Arc::from(root.to_string());
        Expression {
            root: Arc::new(root),
            source,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// The text this expression was parsed from (trimmed).
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Fully parenthesized canonical form; parses back to an identical tree.
    pub fn canonical(&self) -> String {
        self.root.to_string()
    }

    pub fn evaluate(&self, x: f64) -> Result<f64, EvalError> {
        if !x.is_finite() {
            return Err(EvalError::NonFiniteInput(x));
        }
        eval(&self.root, x)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

/// Parse `text` into an [`Expression`].
pub fn parse(text: &str) -> Result<Expression, ParseError> {
    Expression::parse(text)
}

/// Evaluate `f` at `x`.
pub fn evaluate(f: &Expression, x: f64) -> Result<f64, EvalError> {
    f.evaluate(x)
}

fn finite(op: &'static str, value: f64) -> Result<f64, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite { op, value })
    }
}

fn eval(node: &Node, x: f64) -> Result<f64, EvalError> {
    match node {
        Node::Number(v) => Ok(*v),
        Node::Var => Ok(x),
        Node::Const(c) => Ok(c.value()),
        Node::Neg(a) => Ok(-eval(a, x)?),
        Node::Binary(op, a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            match op {
                BinaryOp::Add => finite("+", a + b),
                BinaryOp::Sub => finite("-", a - b),
                BinaryOp::Mul => finite("*", a * b),
                BinaryOp::Div => {
                    if b == 0.0 {
                        Err(EvalError::DivisionByZero)
                    } else {
                        finite("/", a / b)
                    }
                }
                BinaryOp::Pow => pow(a, b),
            }
        }
        Node::Call(func, arg) => {
            let a = eval(arg, x)?;
            let domain = |func: Func| EvalError::Domain {
                func: func.name(),
                arg: a,
            };
            let v = match func {
                Func::Exp => a.exp(),
                Func::Ln => {
                    if a <= 0.0 {
                        return Err(domain(*func));
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(domain(*func));
                    }
                    a.sqrt()
                }
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Abs => a.abs(),
            };
            finite(func.name(), v)
        }
    }
}

fn pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    let v = base.powf(exponent);
    if v.is_nan() {
        return Err(EvalError::Domain { func: "^", arg: base });
    }
    finite("^", v)
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` is the shortest text that parses back to the same f64
            Node::Number(v) => write!(f, "{v:?}"),
            Node::Var => f.write_str("x"),
            Node::Const(c) => f.write_str(c.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Node {
        parse(s).unwrap().root().clone()
    }

    fn num(v: f64) -> Box<Node> {
        Box::new(Node::Number(v))
    }

    #[test]
    fn single_variable() {
        assert_eq!(p("x"), Node::Var);
        assert_eq!(p("  x "), Node::Var);
    }

    #[test]
    fn multiplication_binds_tighter_than_addition() {
        assert_eq!(
            p("2+3*x"),
            Node::Binary(
                BinaryOp::Add,
                num(2.0),
                Box::new(Node::Binary(BinaryOp::Mul, num(3.0), Box::new(Node::Var)))
            )
        );
    }

    #[test]
    fn call_wraps_power() {
        assert_eq!(
            p("exp(x^2)"),
            Node::Call(
                Func::Exp,
                Box::new(Node::Binary(BinaryOp::Pow, Box::new(Node::Var), num(2.0)))
            )
        );
    }

    #[test]
    fn power_is_right_associative() {
        let f = parse("x^2^3").unwrap();
        assert_eq!(f.evaluate(2.0).unwrap(), 256.0);
        assert_eq!(f.canonical(), "(x ^ (2.0 ^ 3.0))");
    }

    #[test]
    fn unary_minus_is_weaker_than_power() {
        assert_eq!(parse("-x^2").unwrap().evaluate(3.0).unwrap(), -9.0);
        assert_eq!(parse("2^-x").unwrap().evaluate(1.0).unwrap(), 0.5);
        assert_eq!(parse("--x").unwrap().evaluate(4.0).unwrap(), 4.0);
        assert_eq!(parse("-2*x").unwrap().evaluate(4.0).unwrap(), -8.0);
    }

    #[test]
    fn subtraction_and_division_are_left_associative() {
        assert_eq!(parse("10-4-3").unwrap().evaluate(0.0).unwrap(), 3.0);
        assert_eq!(parse("64/4/2").unwrap().evaluate(0.0).unwrap(), 8.0);
    }

    #[test]
    fn evaluates_examples() {
        assert_eq!(parse("x^2").unwrap().evaluate(3.0).unwrap(), 9.0);
        // e^{1/4} from 50-digit arithmetic
        let v = parse("exp(x^2)").unwrap().evaluate(0.5).unwrap();
        assert!((v - 1.2840254166877414).abs() <= 2.3e-16);
        let v = parse("2*pi + e").unwrap().evaluate(0.0).unwrap();
        assert_eq!(v, 2.0 * std::f64::consts::PI + std::f64::consts::E);
        let v = parse("sqrt(abs(x)) + sinh(0) + cosh(0) + sin(0) + cos(0)").unwrap();
        assert_eq!(v.evaluate(-4.0).unwrap(), 4.0);
    }

    #[test]
    fn number_literals() {
        assert_eq!(p("1.5e3"), Node::Number(1500.0));
        assert_eq!(p("2E-2"), Node::Number(0.02));
        assert_eq!(p(".25"), Node::Number(0.25));
        assert_eq!(p("7."), Node::Number(7.0));
    }

    #[test]
    fn domain_errors() {
        let ln = parse("ln(x)").unwrap();
        assert!(matches!(ln.evaluate(-1.0), Err(EvalError::Domain { func: "ln", .. })));
        assert!(matches!(ln.evaluate(0.0), Err(EvalError::Domain { .. })));
        assert!(matches!(
            parse("sqrt(x)").unwrap().evaluate(-0.5),
            Err(EvalError::Domain { func: "sqrt", .. })
        ));
        assert_eq!(parse("1/x").unwrap().evaluate(0.0), Err(EvalError::DivisionByZero));
        assert_eq!(parse("x^-1").unwrap().evaluate(0.0), Err(EvalError::DivisionByZero));
        assert!(matches!(
            parse("x^0.5").unwrap().evaluate(-2.0),
            Err(EvalError::Domain { func: "^", .. })
        ));
        assert!(matches!(
            parse("exp(x)").unwrap().evaluate(1000.0),
            Err(EvalError::NonFinite { op: "exp", .. })
        ));
        assert!(matches!(
            parse("x").unwrap().evaluate(f64::NAN),
            Err(EvalError::NonFiniteInput(_))
        ));
    }

    #[test]
    fn negative_base_with_integer_exponent() {
        assert_eq!(parse("x^3").unwrap().evaluate(-2.0).unwrap(), -8.0);
    }

    #[test]
    fn canonical_text_is_fully_parenthesized() {
        let f = parse("2+3*x - -sin(pi*x)/e").unwrap();
        assert_eq!(f.canonical(), "((2.0 + (3.0 * x)) - ((-sin((pi * x))) / e))");
        assert_eq!(parse(&f.canonical()).unwrap(), f);
    }

    #[test]
    fn source_text_is_kept() {
        let f = parse("  exp(x) ").unwrap();
        assert_eq!(f.source(), "exp(x)");
        assert_eq!(f.to_string(), "exp(x)");
    }

    fn arb_node() -> impl Strategy<Value = Node> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Node::Number),
            Just(Node::Var),
            Just(Node::Const(Constant::E)),
            Just(Node::Const(Constant::Pi)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
                (
                    prop_oneof![
                        Just(BinaryOp::Add),
                        Just(BinaryOp::Sub),
                        Just(BinaryOp::Mul),
                        Just(BinaryOp::Div),
                        Just(BinaryOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Node::Binary(op, Box::new(a), Box::new(b))),
                (0usize..8, inner).prop_map(|(i, a)| Node::Call(Func::ALL[i], Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(node in arb_node()) {
            let text = node.to_string();
            let back = parse(&text).unwrap();
            prop_assert_eq!(back.root(), &node);
            // and once more through the canonical text
            prop_assert_eq!(parse(&back.canonical()).unwrap(), back);
        }

        #[test]
        fn evaluation_is_deterministic(node in arb_node(), x in -10.0f64..10.0) {
            let f = Expression::from_node(node);
            let a = f.evaluate(x).map(f64::to_bits);
            let b = f.evaluate(x).map(f64::to_bits);
            prop_assert_eq!(a, b);
        }
    }
}
