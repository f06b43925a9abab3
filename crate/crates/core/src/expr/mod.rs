//! Closed-form expressions in one variable `x`.
//!
//! Grammar (no implicit multiplication, integer powers only):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' integer)?
//! base   := number | 'x' | func '(' expr ')' | '(' expr ')'
//! func   := exp | log | sin | cos | sqrt
//! ```
//!
//! Evaluation produces exact derivative jets by propagating the Leibniz
//! rule and the elementary-function recurrences through the tree.

mod parser;

use std::fmt;

use thiserror::Error;

use crate::jet::{binomial, Jet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected one of {}, found {found}", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at x = {x}")]
pub struct DomainError {
    pub x: f64,
    pub message: String,
}

impl DomainError {
    fn new(x: f64, message: impl Into<String>) -> Self {
        Self {
            x,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    X,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    /// Prefix rendering, e.g. `(sub (div (pow x 2) 2) (div 1 6))`.
    pub fn to_sexpr(&self) -> String {
        match self {
            Node::Num(v) => format!("{v}"),
            Node::X => "x".into(),
            Node::Neg(a) => format!("(neg {})", a.to_sexpr()),
            Node::Add(a, b) => format!("(add {} {})", a.to_sexpr(), b.to_sexpr()),
            Node::Sub(a, b) => format!("(sub {} {})", a.to_sexpr(), b.to_sexpr()),
            Node::Mul(a, b) => format!("(mul {} {})", a.to_sexpr(), b.to_sexpr()),
            Node::Div(a, b) => format!("(div {} {})", a.to_sexpr(), b.to_sexpr()),
            Node::Pow(a, n) => format!("(pow {} {n})", a.to_sexpr()),
            Node::Call(f, a) => format!("({} {})", f.name(), a.to_sexpr()),
        }
    }

    /// True when the tree does not mention `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Node::Num(_) => true,
            Node::X => false,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.is_constant(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// True for polynomials in `x` (no functions, no division by `x`, no negative powers).
    pub fn is_polynomial(&self) -> bool {
        match self {
            Node::Num(_) | Node::X => true,
            Node::Neg(a) => a.is_polynomial(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.is_polynomial() && b.is_polynomial()
            }
            Node::Div(a, b) => a.is_polynomial() && b.is_constant(),
            Node::Pow(a, n) => *n >= 0 && a.is_polynomial(),
            Node::Call(_, a) => a.is_constant(),
        }
    }

    fn value(&self, x: f64) -> Result<f64, DomainError> {
        let v = match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::Neg(a) => -a.value(x)?,
            Node::Add(a, b) => a.value(x)? + b.value(x)?,
            Node::Sub(a, b) => a.value(x)? - b.value(x)?,
            Node::Mul(a, b) => a.value(x)? * b.value(x)?,
            Node::Div(a, b) => {
                let d = b.value(x)?;
                if d == 0.0 {
                    return Err(DomainError::new(x, "division by zero"));
                }
                a.value(x)? / d
            }
            Node::Pow(a, n) => {
                let base = a.value(x)?;
                if *n < 0 && base == 0.0 {
                    return Err(DomainError::new(x, "negative power of zero"));
                }
                base.powi(*n)
            }
            Node::Call(f, a) => {
                let u = a.value(x)?;
                match f {
                    Func::Exp => u.exp(),
                    Func::Log if u <= 0.0 => {
                        return Err(DomainError::new(x, "log of nonpositive argument"))
                    }
                    Func::Log => u.ln(),
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Sqrt if u < 0.0 => {
                        return Err(DomainError::new(x, "sqrt of negative argument"))
                    }
                    Func::Sqrt => u.sqrt(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DomainError::new(x, "non-finite value"))
        }
    }

    fn jet(&self, x: f64, order: usize) -> Result<Jet, DomainError> {
        let j = match self {
            Node::Num(v) => Jet::constant(x, *v, order),
            Node::X => Jet::variable(x, order),
            Node::Neg(a) => a.jet(x, order)?.negate(),
            Node::Add(a, b) => same_anchor(a.jet(x, order)?.add(&b.jet(x, order)?)),
            Node::Sub(a, b) => same_anchor(a.jet(x, order)?.sub(&b.jet(x, order)?)),
            Node::Mul(a, b) => same_anchor(a.jet(x, order)?.mul(&b.jet(x, order)?)),
            Node::Div(a, b) => {
                let d = b.jet(x, order)?;
                if d.value() == 0.0 {
                    return Err(DomainError::new(x, "division by zero"));
                }
                a.jet(x, order)?.div_unguarded(&d)
            }
            Node::Pow(a, n) => {
                let base = a.jet(x, order)?;
                if *n < 0 && base.value() == 0.0 {
                    return Err(DomainError::new(x, "negative power of zero"));
                }
                let p = int_power(&base, n.unsigned_abs());
                if *n < 0 {
                    Jet::constant(x, 1.0, order).div_unguarded(&p)
                } else {
                    p
                }
            }
            Node::Call(f, a) => {
                let u = a.jet(x, order)?;
                match f {
                    Func::Exp => exp_jet(&u),
                    Func::Sin => sin_cos_jet(&u).0,
                    Func::Cos => sin_cos_jet(&u).1,
                    Func::Log => {
                        if u.value() <= 0.0 {
                            return Err(DomainError::new(x, "log of nonpositive argument"));
                        }
                        log_jet(&u)
                    }
                    Func::Sqrt => {
                        if u.value() < 0.0 || (u.value() == 0.0 && order > 0) {
                            return Err(DomainError::new(x, "sqrt of nonpositive argument"));
                        }
                        sqrt_jet(&u)
                    }
                }
            }
        };
        if j.is_finite() {
            Ok(j)
        } else {
            Err(DomainError::new(x, "non-finite derivative"))
        }
    }
}

fn same_anchor(r: Result<Jet, crate::jet::JetError>) -> Jet {
    r.expect("subexpression jets share one anchor")
}

fn int_power(base: &Jet, mut n: u32) -> Jet {
    let mut result = Jet::constant(base.anchor(), 1.0, base.order());
    let mut square = base.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = same_anchor(result.mul(&square));
        }
        n >>= 1;
        if n > 0 {
            square = same_anchor(square.mul(&square));
        }
    }
    result
}

// u' = u v'
fn exp_jet(v: &Jet) -> Jet {
    let c = v.coeffs();
    let mut u = Vec::with_capacity(c.len());
    u.push(c[0].exp());
    for m in 1..c.len() {
        let s = (0..m).map(|r| binomial(m - 1, r) * u[r] * c[m - r]).sum();
        u.push(s);
    }
    Jet::new(v.anchor(), u)
}

// s' = c v', c' = -s v'
fn sin_cos_jet(v: &Jet) -> (Jet, Jet) {
    let c = v.coeffs();
    let mut s = vec![c[0].sin()];
    let mut k = vec![c[0].cos()];
    for m in 1..c.len() {
        let mut ds = 0.0;
        let mut dk = 0.0;
        for r in 0..m {
            let w = binomial(m - 1, r) * c[m - r];
            ds += w * k[r];
            dk -= w * s[r];
        }
        s.push(ds);
        k.push(dk);
    }
    (Jet::new(v.anchor(), s), Jet::new(v.anchor(), k))
}

// u' = v'/v
fn log_jet(v: &Jet) -> Jet {
    let head = v.value().ln();
    if v.order() == 0 {
        return Jet::new(v.anchor(), vec![head]);
    }
    let ratio = v.formal_derivative().div_unguarded(&v.truncate(v.order() - 1));
    ratio.antiderivative_shift(head)
}

// u u = v
fn sqrt_jet(v: &Jet) -> Jet {
    let c = v.coeffs();
    let mut u = vec![c[0].sqrt()];
    for m in 1..c.len() {
        let cross: f64 = (1..m).map(|r| binomial(m, r) * u[r] * u[m - r]).sum();
        u.push((c[m] - cross) / (2.0 * u[0]));
    }
    Jet::new(v.anchor(), u)
}

impl fmt::Display for Node {
    /// Fully parenthesized form that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::X => write!(f, "x"),
            Node::Neg(a) => write!(f, "-({a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, n) => write!(f, "({a})^{n}"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed expression together with the text it came from.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Node,
    source: String,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let root = parser::Parser::new(text).parse()?;
        Ok(Self {
            root,
            source: text.to_string(),
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            root: Node::Num(value),
            source: format!("{value}"),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Canonical text that re-parses to a structurally identical tree.
    pub fn serialize(&self) -> String {
        self.root.to_string()
    }

    pub fn eval(&self, x: f64) -> Result<f64, DomainError> {
        self.root.value(x)
    }

    /// Derivatives `[f(x), f'(x), ..., f^(order)(x)]`.
    pub fn eval_jet(&self, x: f64, order: usize) -> Result<Jet, DomainError> {
        if !x.is_finite() {
            return Err(DomainError::new(x, "non-finite evaluation point"));
        }
        self.root.jet(x, order)
    }
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}
