//! Closed-form expressions over source coordinates `x1..xn`.
//!
//! Grammar (whitespace insignificant, no implicit multiplication):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' '-'? integer)*
//! primary := number | 'pi' | x<k> | param | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | tan | exp | log | sqrt | abs
//! ```

mod parse;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::jet::{Jet2, MAX_VARS};
use crate::real::Real;

pub use parse::{parse, parse_with_params};

/// Named scalar bindings substituted for parameter identifiers.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable x{index} at byte {offset} is outside 1..={n_vars}")]
    VariableOutOfRange { offset: usize, index: usize, n_vars: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("parameter `{name}` is not bound")]
    UnboundParameter { name: String },
    #[error("domain error in `{node}` at byte {offset}: {message}")]
    Domain {
        offset: usize,
        node: String,
        message: String,
    },
    #[error("point has {got} coordinates, expression expects {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Zero-based coordinate index.
    Var(usize),
    Num(f64),
    Pi,
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// Expression tree node with the byte offset it was parsed from.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub offset: usize,
}

impl Expr {
    pub fn new(node: Node, offset: usize) -> Self {
        Self { node, offset }
    }

    /// Largest variable index (one-based) referenced, or 0 for none.
    pub fn max_variable(&self) -> usize {
        match &self.node {
            Node::Var(i) => i + 1,
            Node::Num(_) | Node::Pi | Node::Param(_) => 0,
            Node::Neg(e) | Node::Pow(e, _) | Node::Call(_, e) => e.max_variable(),
            Node::Binary(_, a, b) => a.max_variable().max(b.max_variable()),
        }
    }

    /// Whether the expression depends on coordinate `index` (zero-based).
    pub fn uses_variable(&self, index: usize) -> bool {
        match &self.node {
            Node::Var(i) => *i == index,
            Node::Num(_) | Node::Pi | Node::Param(_) => false,
            Node::Neg(e) | Node::Pow(e, _) | Node::Call(_, e) => e.uses_variable(index),
            Node::Binary(_, a, b) => a.uses_variable(index) || b.uses_variable(index),
        }
    }

    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match &self.node {
            Node::Param(name) => out.push(name.clone()),
            Node::Var(_) | Node::Num(_) | Node::Pi => {}
            Node::Neg(e) | Node::Pow(e, _) | Node::Call(_, e) => e.collect_params(out),
            Node::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    /// Replaces parameter identifiers with their bound values.
    pub fn bind(&self, params: &Params) -> Result<Expr, ExprError> {
        let node = match &self.node {
            Node::Param(name) => match params.get(name) {
                Some(&v) => Node::Num(v),
                None => return Err(ExprError::UnboundParameter { name: name.clone() }),
            },
            Node::Var(i) => Node::Var(*i),
            Node::Num(v) => Node::Num(*v),
            Node::Pi => Node::Pi,
            Node::Neg(e) => Node::Neg(Box::new(e.bind(params)?)),
            Node::Pow(e, k) => Node::Pow(Box::new(e.bind(params)?), *k),
            Node::Call(f, e) => Node::Call(*f, Box::new(e.bind(params)?)),
            Node::Binary(op, a, b) => Node::Binary(*op, Box::new(a.bind(params)?), Box::new(b.bind(params)?)),
        };
        Ok(Expr::new(node, self.offset))
    }

    /// Evaluates over any [`Real`] scalar. Domain violations are checked on
    /// primal values.
    pub fn eval<T: Real>(&self, point: &[T], params: &Params) -> Result<T, ExprError> {
        Ok(match &self.node {
            Node::Var(i) => match point.get(*i) {
                Some(&v) => v,
                None => {
                    return Err(ExprError::VariableOutOfRange {
                        offset: self.offset,
                        index: i + 1,
                        n_vars: point.len(),
                    })
                }
            },
            Node::Num(v) => T::from_f64(*v),
            Node::Pi => T::from_f64(std::f64::consts::PI),
            Node::Param(name) => match params.get(name) {
                Some(&v) => T::from_f64(v),
                None => return Err(ExprError::UnboundParameter { name: name.clone() }),
            },
            Node::Neg(e) => -e.eval(point, params)?,
            Node::Binary(op, a, b) => {
                let a = a.eval(point, params)?;
                let b = b.eval(point, params)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.value() == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        a / b
                    }
                }
            }
            Node::Pow(e, k) => {
                let base = e.eval(point, params)?;
                if *k < 0 && base.value() == 0.0 {
                    return Err(self.domain("negative power of zero"));
                }
                base.powi(*k)
            }
            Node::Call(f, e) => {
                let x = e.eval(point, params)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => {
                        if x.value().cos() == 0.0 {
                            return Err(self.domain("tan at a pole"));
                        }
                        x.tan()
                    }
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x.value() <= 0.0 {
                            return Err(self.domain("log of non-positive value"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x.value() < 0.0 {
                            return Err(self.domain("sqrt of negative value"));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                }
            }
        })
    }

    fn domain(&self, message: &str) -> ExprError {
        ExprError::Domain {
            offset: self.offset,
            node: self.to_string(),
            message: message.to_string(),
        }
    }

    pub fn eval_f64(&self, point: &[f64], params: &Params) -> Result<f64, ExprError> {
        self.eval(point, params)
    }

    fn precedence(&self) -> u8 {
        match &self.node {
            Node::Binary(op, _, _) => op.precedence(),
            Node::Neg(_) => 3,
            Node::Pow(_, _) => 4,
            Node::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            _ => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{:?}", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Node::Pi => write!(f, "pi"),
            Node::Param(name) => write!(f, "{name}"),
            Node::Neg(e) => {
                write!(f, "-")?;
                e.fmt_child(f, 3)
            }
            Node::Binary(op, a, b) => {
                let p = op.precedence();
                a.fmt_child(f, p)?;
                write!(f, " {} ", op.symbol())?;
                // Same-precedence right operands need parentheses (left associativity).
                b.fmt_child(f, p + 1)
            }
            Node::Pow(e, k) => {
                e.fmt_child(f, 5)?;
                write!(f, "^{k}")
            }
            Node::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// Evaluates `e` with value, gradient and Hessian with respect to every
/// coordinate of `point`.
pub fn eval_jet2(e: &Expr, point: &[f64], params: &Params) -> Result<Jet2, ExprError> {
    if point.len() > MAX_VARS {
        return Err(ExprError::Dimension {
            expected: MAX_VARS,
            got: point.len(),
        });
    }
    let seeded = Jet2::seed(point);
    let mut out = e.eval(&seeded, params)?;
    if out.n_vars() < point.len() {
        // constant expression: widen so callers see full-length gradients
        out = out + Jet2::constant(point.len(), 0.0);
    }
    if !out.is_finite() {
        return Err(ExprError::Domain {
            offset: e.offset,
            node: e.to_string(),
            message: "non-finite value or derivative".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Params {
        Params::new()
    }

    #[test]
    fn precedence_examples() {
        let e = parse("2+3*4", 1).unwrap();
        assert_eq!(e.eval_f64(&[0.0], &p()).unwrap(), 14.0);
        let e = parse("-x1^2", 1).unwrap();
        assert_eq!(e.eval_f64(&[2.0], &p()).unwrap(), -4.0);
    }

    #[test]
    fn identity_and_symmetry() {
        let e = parse("x1", 1).unwrap();
        assert_eq!(e.eval_f64(&[7.0], &p()).unwrap(), 7.0);
        let e = parse("(x5-x8)/sqrt(2)", 8).unwrap();
        assert_eq!(e.eval_f64(&[1.0; 8], &p()).unwrap(), 0.0);
    }

    #[test]
    fn left_associativity() {
        let e = parse("8 - 3 - 2", 1).unwrap();
        assert_eq!(e.eval_f64(&[0.0], &p()).unwrap(), 3.0);
        let e = parse("8 / 4 / 2", 1).unwrap();
        assert_eq!(e.eval_f64(&[0.0], &p()).unwrap(), 1.0);
        assert_eq!(e.to_string(), "8.0 / 4.0 / 2.0");
        let e = parse("8 - (3 - 2)", 1).unwrap();
        assert_eq!(e.to_string(), "8.0 - (3.0 - 2.0)");
    }

    #[test]
    fn square_jet() {
        let e = parse("x1^2", 1).unwrap();
        let j = eval_jet2(&e, &[3.0], &p()).unwrap();
        assert_eq!(j.val(), 9.0);
        assert_eq!(j.gradient(), vec![6.0]);
        assert_eq!(j.hessian(), vec![vec![2.0]]);
    }

    #[test]
    fn example6_component_gradient() {
        let e = parse("(x5-x8)/sqrt(2)", 8).unwrap();
        let j = eval_jet2(&e, &[0.3; 8], &p()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (i, g) in j.gradient().iter().enumerate() {
            let want = match i {
                4 => s,
                7 => -s,
                _ => 0.0,
            };
            assert!((g - want).abs() < 1e-15, "slot {i}");
        }
        assert!(j.hessian().iter().flatten().all(|&h| h == 0.0));
    }

    #[test]
    fn example5_component_with_parameter() {
        let e = parse_with_params("x3*sin(a) - x5*cos(a)", 6, &["a"]).unwrap();
        let mut params = Params::new();
        params.insert("a".into(), 0.4);
        let x = [0.0, 0.0, 1.5, 0.0, -2.0, 0.0];
        let v = e.eval_f64(&x, &params).unwrap();
        assert!((v - (1.5 * 0.4f64.sin() + 2.0 * 0.4f64.cos())).abs() < 1e-15);
        assert!(matches!(
            e.eval_f64(&x, &Params::new()),
            Err(ExprError::UnboundParameter { .. })
        ));
    }

    #[test]
    fn domain_errors_carry_location() {
        let e = parse("1 + log(x1)", 1).unwrap();
        match e.eval_f64(&[-1.0], &p()) {
            Err(ExprError::Domain { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        let e = parse("1/(x1-x1)", 1).unwrap();
        assert!(matches!(e.eval_f64(&[2.0], &p()), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn bind_replaces_parameters() {
        let e = parse_with_params("x1*alpha", 1, &["alpha"]).unwrap();
        let mut params = Params::new();
        params.insert("alpha".into(), 2.5);
        let b = e.bind(&params).unwrap();
        assert!(b.params().is_empty());
        assert_eq!(b.eval_f64(&[2.0], &p()).unwrap(), 5.0);
    }

    #[test]
    fn negative_literal_prints_parseably() {
        let e = Expr::new(
            Node::Binary(
                BinOp::Sub,
                Box::new(Expr::new(Node::Num(1.0), 0)),
                Box::new(Expr::new(Node::Num(-2.5), 0)),
            ),
            0,
        );
        let back = parse(&e.to_string(), 1).unwrap();
        assert_eq!(back.eval_f64(&[0.0], &p()).unwrap(), 3.5);
    }
}
