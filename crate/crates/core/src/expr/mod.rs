//! A small expression language for the user-supplied formulas in problem
//! files: parsing, evaluation, substitution and exact symbolic derivatives.
//!
//! Exponents of `^` must be constant so that [`Expr::diff`] is total.

mod diff;
mod parser;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("non-constant exponent at offset {pos}")]
    NonConstantExponent { pos: usize },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {op} of {arg}")]
    Domain { op: &'static str, arg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> Result<f64, ExprError> {
        match self {
            UnaryOp::Neg => Ok(-x),
            UnaryOp::Sin => Ok(x.sin()),
            UnaryOp::Cos => Ok(x.cos()),
            UnaryOp::Exp => Ok(x.exp()),
            UnaryOp::Ln if x > 0.0 => Ok(x.ln()),
            UnaryOp::Ln => Err(ExprError::Domain { op: "ln", arg: x }),
            UnaryOp::Sqrt if x >= 0.0 => Ok(x.sqrt()),
            UnaryOp::Sqrt => Err(ExprError::Domain { op: "sqrt", arg: x }),
            UnaryOp::Abs => Ok(x.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// Immutable expression tree. Cloning is cheap for the shared variable names.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Arc<str>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `base ^ exponent` with a constant exponent.
    Pow(Box<Expr>, f64),
}

/// Variable lookup used by [`Expr::eval`].
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

impl<F: Fn(&str) -> Option<f64>> Bindings for F {
    fn lookup(&self, name: &str) -> Option<f64> {
        self(name)
    }
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Arc::from(name))
    }

    pub fn eval<B: Bindings + ?Sized>(&self, env: &B) -> Result<f64, ExprError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(name) => env
                .lookup(name)
                .ok_or_else(|| ExprError::Unbound(name.to_string())),
            Expr::Unary(op, arg) => op.apply(arg.eval(env)?),
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.eval(env)?;
                let r = rhs.eval(env)?;
                match op {
                    BinOp::Add => Ok(l + r),
                    BinOp::Sub => Ok(l - r),
                    BinOp::Mul => Ok(l * r),
                    BinOp::Div if r == 0.0 => Err(ExprError::Domain { op: "division", arg: r }),
                    BinOp::Div => Ok(l / r),
                }
            }
            Expr::Pow(base, p) => {
                let b = base.eval(env)?;
                if b < 0.0 && p.fract() != 0.0 {
                    return Err(ExprError::Domain { op: "fractional power", arg: b });
                }
                if b == 0.0 && *p < 0.0 {
                    return Err(ExprError::Domain { op: "negative power", arg: b });
                }
                if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    Ok(b.powi(*p as i32))
                } else {
                    Ok(b.powf(*p))
                }
            }
        }
    }

    /// Convenience for single-variable expressions.
    pub fn eval1(&self, name: &str, value: f64) -> Result<f64, ExprError> {
        self.eval(&[(name, value)])
    }

    /// Replaces every occurrence of variable `name` by `with`.
    pub fn subst(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Var(v) if &**v == name => with.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.subst(name, with))),
            Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(l.subst(name, with)),
                Box::new(r.subst(name, with)),
            ),
            Expr::Pow(b, p) => Expr::Pow(Box::new(b.subst(name, with)), *p),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => &**v == name,
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.mentions(name),
            Expr::Binary(_, l, r) => l.mentions(name) || r.mentions(name),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_number(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c:?}")
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "-{}", fmt_number(-c)),
            Expr::Const(c) => f.write_str(&fmt_number(*c)),
            Expr::Var(v) => f.write_str(v),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_operand(f, a, a.precedence() < 4)
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, l, r) => {
                let p = self.precedence();
                write_operand(f, l, l.precedence() < p)?;
                f.write_str(op.symbol())?;
                // left-associative: an equal-precedence right operand needs parentheses
                write_operand(f, r, r.precedence() <= p)
            }
            Expr::Pow(b, p) => {
                write_operand(f, b, b.precedence() <= 4)?;
                if *p < 0.0 {
                    write!(f, "^(-{})", fmt_number(-p))
                } else {
                    write!(f, "^{}", fmt_number(*p))
                }
            }
        }
    }
}
