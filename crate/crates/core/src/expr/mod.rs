//! A small real-valued expression language with exact first and second
//! derivatives.
//!
//! Expressions are parsed once against an ordered list of variable names and
//! are immutable afterwards. [`Expression::eval_jet`] propagates second-order
//! forward-mode jets through the tree, so gradients and Hessians are exact up
//! to floating-point rounding.

mod jet;
mod parser;

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

pub use jet::JetValue;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("invalid variable list: {0}")]
    InvalidVariables(String),

    #[error("expected a point with {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("domain error in '{subexpr}': {reason}")]
    Domain { subexpr: String, reason: String },

    #[error("non-finite result in '{subexpr}'")]
    NonFinite { subexpr: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
}

impl Func {
    const ALL: [(Func, &'static str); 7] = [
        (Func::Sin, "sin"),
        (Func::Cos, "cos"),
        (Func::Exp, "exp"),
        (Func::Log, "log"),
        (Func::Sqrt, "sqrt"),
        (Func::Abs, "abs"),
        (Func::Tanh, "tanh"),
    ];

    fn from_name(name: &str) -> Option<Func> {
        Self::ALL.iter().find(|(_, n)| *n == name).map(|(f, _)| *f)
    }

    fn name(self) -> &'static str {
        Self::ALL.iter().find(|(f, _)| *f == self).map(|(_, n)| *n).unwrap_or("?")
    }

    /// `(f(v), f'(v), f''(v))`, or a reason when `v` is outside the domain.
    fn derivatives<T: Scalar>(self, v: T) -> Result<(T, T, T), String> {
        let two = T::of(2.0);
        Ok(match self {
            Func::Sin => (v.sin(), v.cos(), -v.sin()),
            Func::Cos => (v.cos(), -v.sin(), -v.cos()),
            Func::Exp => {
                let e = v.exp();
                (e, e, e)
            }
            Func::Log => {
                if v <= T::zero() {
                    return Err(format!("log of non-positive value {v}"));
                }
                (v.ln(), v.recip(), -(v * v).recip())
            }
            Func::Sqrt => {
                if v < T::zero() {
                    return Err(format!("sqrt of negative value {v}"));
                }
                let s = v.sqrt();
                (s, (two * s).recip(), -(T::of(4.0) * v * s).recip())
            }
            Func::Abs => (v.abs(), v.signum(), T::zero()),
            Func::Tanh => {
                let th = v.tanh();
                let sech2 = T::one() - th * th;
                (th, sech2, -two * th * sech2)
            }
        })
    }

    fn value<T: Scalar>(self, v: T) -> Result<T, String> {
        Ok(match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log if v <= T::zero() => return Err(format!("log of non-positive value {v}")),
            Func::Log => v.ln(),
            Func::Sqrt if v < T::zero() => return Err(format!("sqrt of negative value {v}")),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Tanh => v.tanh(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "pi" => Some(NamedConst::Pi),
            "e" => Some(NamedConst::E),
            _ => None,
        }
    }

    fn value<T: Scalar>(self) -> T {
        match self {
            NamedConst::Pi => T::PI(),
            NamedConst::E => T::E(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Node {
    Num(f64),
    Var(usize),
    Const(NamedConst),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn has_vars(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Num(_) | Node::Const(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.has_vars(),
            Node::Binary(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }
}

/// A parsed expression over an ordered list of named variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Node,
    variables: Vec<String>,
    source: String,
}

fn is_reserved(name: &str) -> bool {
    Func::from_name(name).is_some() || NamedConst::from_name(name).is_some()
}

impl Expression {
    /// Parses `source` with the given variable names (in coordinate order).
    pub fn parse<S: AsRef<str>>(source: &str, variables: &[S]) -> Result<Self, ExprError> {
        let variables: Vec<String> = variables.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, v) in variables.iter().enumerate() {
            let mut chars = v.chars();
            let ok_start = chars.next().map(|c| c.is_alphabetic() || c == '_').unwrap_or(false);
            if !ok_start || !v.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(ExprError::InvalidVariables(format!("'{v}' is not an identifier")));
            }
            if is_reserved(v) {
                return Err(ExprError::InvalidVariables(format!("'{v}' collides with a builtin name")));
            }
            if variables[..i].contains(v) {
                return Err(ExprError::InvalidVariables(format!("'{v}' declared twice")));
            }
        }
        if source.trim().is_empty() {
            return Err(ExprError::Syntax { offset: 0, message: "empty expression".into() });
        }
        let root = parser::parse_tree(source, &variables)?;
        Ok(Self { root, variables, source: source.to_string() })
    }

    /// Parses with the conventional names `prefix1 .. prefixN`.
    pub fn parse_indexed(source: &str, prefix: &str, n: usize) -> Result<Self, ExprError> {
        let names: Vec<String> = (1..=n).map(|i| format!("{prefix}{i}")).collect();
        Self::parse(source, &names)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    fn check_arity(&self, len: usize) -> Result<(), ExprError> {
        if len != self.variables.len() {
            return Err(ExprError::Arity { expected: self.variables.len(), got: len });
        }
        Ok(())
    }

    /// Value only; cheaper than [`Self::eval_jet`].
    pub fn eval<T: Scalar>(&self, point: &[T]) -> Result<T, ExprError> {
        self.check_arity(point.len())?;
        let v = self.value_of(&self.root, point)?;
        if !v.is_finite() {
            return Err(ExprError::NonFinite { subexpr: self.render(&self.root) });
        }
        Ok(v)
    }

    /// Value, gradient and Hessian at `point`.
    pub fn eval_jet<T: Scalar>(&self, point: &[T]) -> Result<JetValue<T>, ExprError> {
        self.check_arity(point.len())?;
        let j = self.jet_of(&self.root, point)?;
        if !j.is_finite() {
            return Err(ExprError::NonFinite { subexpr: self.render(&self.root) });
        }
        Ok(j)
    }

    fn domain(&self, node: &Node, reason: String) -> ExprError {
        ExprError::Domain { subexpr: self.render(node), reason }
    }

    fn value_of<T: Scalar>(&self, node: &Node, p: &[T]) -> Result<T, ExprError> {
        Ok(match node {
            Node::Num(v) => T::of(*v),
            Node::Var(i) => p[*i],
            Node::Const(c) => c.value(),
            Node::Neg(a) => -self.value_of(a, p)?,
            Node::Call(f, a) => {
                let v = self.value_of(a, p)?;
                f.value(v).map_err(|r| self.domain(node, r))?
            }
            Node::Binary(op, a, b) => {
                let x = self.value_of(a, p)?;
                let y = self.value_of(b, p)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == T::zero() {
                            return Err(self.domain(node, "division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => self.pow_value(node, x, y, b.has_vars())?,
                }
            }
        })
    }

    fn pow_value<T: Scalar>(&self, node: &Node, base: T, exp: T, var_exp: bool) -> Result<T, ExprError> {
        if !var_exp && exp == exp.round() {
            if base == T::zero() && exp < T::zero() {
                return Err(self.domain(node, "zero raised to a negative power".into()));
            }
            return Ok(int_pow(base, exp));
        }
        if base < T::zero() || (var_exp && base == T::zero()) {
            return Err(self.domain(node, format!("non-integer power of non-positive base {base}")));
        }
        Ok(base.powf(exp))
    }

    fn jet_of<T: Scalar>(&self, node: &Node, p: &[T]) -> Result<JetValue<T>, ExprError> {
        let n = p.len();
        Ok(match node {
            Node::Num(v) => JetValue::constant(n, T::of(*v)),
            Node::Var(i) => JetValue::variable(n, *i, p[*i]),
            Node::Const(c) => JetValue::constant(n, c.value()),
            Node::Neg(a) => self.jet_of(a, p)?.neg(),
            Node::Call(f, a) => {
                let inner = self.jet_of(a, p)?;
                let (v, d1, d2) = f.derivatives(inner.value).map_err(|r| self.domain(node, r))?;
                inner.chain(v, d1, d2)
            }
            Node::Binary(op, a, b) => {
                let x = self.jet_of(a, p)?;
                match op {
                    BinOp::Add => x.add(&self.jet_of(b, p)?),
                    BinOp::Sub => x.sub(&self.jet_of(b, p)?),
                    BinOp::Mul => x.mul(&self.jet_of(b, p)?),
                    BinOp::Div => {
                        let y = self.jet_of(b, p)?;
                        if y.value == T::zero() {
                            return Err(self.domain(node, "division by zero".into()));
                        }
                        x.div(&y)
                    }
                    BinOp::Pow if !b.has_vars() => {
                        let e = self.value_of(b, p)?;
                        self.pow_const_jet(node, &x, e)?
                    }
                    BinOp::Pow => {
                        // base^exp = exp(exp · log(base)), base > 0
                        if x.value <= T::zero() {
                            return Err(self.domain(
                                node,
                                format!("variable power of non-positive base {}", x.value),
                            ));
                        }
                        let y = self.jet_of(b, p)?;
                        let ln = x.value.ln();
                        let log_base = x.chain(ln, x.value.recip(), -(x.value * x.value).recip());
                        let arg = y.mul(&log_base);
                        let e = arg.value.exp();
                        arg.chain(e, e, e)
                    }
                }
            }
        })
    }

    fn pow_const_jet<T: Scalar>(&self, node: &Node, x: &JetValue<T>, e: T) -> Result<JetValue<T>, ExprError> {
        let b = x.value;
        let one = T::one();
        if e == T::zero() {
            return Ok(JetValue::constant(x.dim(), one));
        }
        if e == e.round() {
            if b == T::zero() && e < T::zero() {
                return Err(self.domain(node, "zero raised to a negative power".into()));
            }
            let d1 = e * int_pow(b, e - one);
            let d2 = if e == one { T::zero() } else { e * (e - one) * int_pow(b, e - one - one) };
            return Ok(x.chain(int_pow(b, e), d1, d2));
        }
        if b < T::zero() {
            return Err(self.domain(node, format!("non-integer power of negative base {b}")));
        }
        let d1 = e * b.powf(e - one);
        let d2 = e * (e - one) * b.powf(e - one - one);
        Ok(x.chain(b.powf(e), d1, d2))
    }

    fn render(&self, node: &Node) -> String {
        let mut s = String::new();
        self.write_node(node, &mut s);
        s
    }

    fn write_node(&self, node: &Node, out: &mut String) {
        match node {
            Node::Num(v) => out.push_str(&format!("{v:?}")),
            Node::Var(i) => out.push_str(&self.variables[*i]),
            Node::Const(NamedConst::Pi) => out.push_str("pi"),
            Node::Const(NamedConst::E) => out.push('e'),
            Node::Neg(a) => {
                out.push_str("(-");
                self.write_node(a, out);
                out.push(')');
            }
            Node::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                self.write_node(a, out);
                out.push(')');
            }
            Node::Binary(op, a, b) => {
                out.push('(');
                self.write_node(a, out);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                self.write_node(b, out);
                out.push(')');
            }
        }
    }
}

/// Integer power for an integral-valued exponent (exponent may be negative).
fn int_pow<T: Scalar>(base: T, exp: T) -> T {
    match exp.to_i32() {
        Some(k) => base.powi(k),
        None => base.powf(exp),
    }
}

/// Fully parenthesized rendering; reparses to an equivalent expression.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&self.root))
    }
}
