//! A small expression language for costs, potentials and densities.
//!
//! Variables are `x1..xd` and `y1..yd`. Bare `x` and `y` denote vectors and
//! may only appear inside the sugar functions `dot(a, b)` and `norm2(v)`
//! (squared Euclidean norm), which expand to scalar sums at parse time.

mod lexer;
mod parser;

pub use lexer::{tokenize, Tok, Token};
pub use parser::parse;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Cosh,
    Sinh,
    Asinh,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Asinh => "asinh",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "cosh" => Func::Cosh,
            "sinh" => Func::Sinh,
            "asinh" => Func::Asinh,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

/// Scalar AST. Vector sugar is already expanded, and `^` always carries a
/// constant exponent.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 1-based coordinate index.
    Var(VarKind, usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn var(kind: VarKind, index: usize) -> Expr {
        Expr::Var(kind, index)
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Exchange the roles of `x` and `y`.
    pub fn swap_args(&self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(VarKind::X, i) => Expr::Var(VarKind::Y, *i),
            Expr::Var(VarKind::Y, i) => Expr::Var(VarKind::X, *i),
            Expr::Neg(e) => Expr::Neg(Box::new(e.swap_args())),
            Expr::Binary(op, l, r) => Expr::bin(*op, l.swap_args(), r.swap_args()),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.swap_args())),
        }
    }

    /// Largest index used for the given variable kind (0 if absent).
    pub fn max_index(&self, kind: VarKind) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(k, i) => {
                if *k == kind {
                    *i
                } else {
                    0
                }
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.max_index(kind),
            Expr::Binary(_, l, r) => l.max_index(kind).max(r.max_index(kind)),
        }
    }

    /// Evaluate with the given bindings for `x` and `y` (0-based slices).
    pub fn eval<S: Scalar>(&self, xs: &[S], ys: &[S]) -> Result<S> {
        Ok(match self {
            Expr::Const(c) => S::from_f64(*c),
            Expr::Var(VarKind::X, i) => lookup(xs, *i, 'x')?,
            Expr::Var(VarKind::Y, i) => lookup(ys, *i, 'y')?,
            Expr::Neg(e) => -e.eval(xs, ys)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(xs, ys)?;
                match op {
                    BinOp::Add => a + r.eval(xs, ys)?,
                    BinOp::Sub => a - r.eval(xs, ys)?,
                    BinOp::Mul => a * r.eval(xs, ys)?,
                    BinOp::Div => {
                        let b = r.eval(xs, ys)?;
                        if b.value() == 0.0 {
                            return Err(Error::SingularJet("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        let Expr::Const(p) = **r else {
                            return Err(Error::Domain("non-constant exponent".into()));
                        };
                        pow(a, p)?
                    }
                }
            }
            Expr::Call(f, e) => {
                let a = e.eval(xs, ys)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if !(a.value() > 0.0) {
                            return Err(Error::Domain(format!("log of {}", a.value())));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if !(a.value() > 0.0) {
                            return Err(Error::Domain(format!("sqrt of {}", a.value())));
                        }
                        a.sqrt()
                    }
                    Func::Cosh => a.cosh(),
                    Func::Sinh => a.sinh(),
                    Func::Asinh => a.asinh(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
        })
    }
}

fn lookup<S: Scalar>(vals: &[S], i: usize, name: char) -> Result<S> {
    vals.get(i.wrapping_sub(1))
        .cloned()
        .ok_or_else(|| Error::Domain(format!("variable {name}{i} is not bound")))
}

fn pow<S: Scalar>(a: S, p: f64) -> Result<S> {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        if p < 0.0 && a.value() == 0.0 {
            return Err(Error::SingularJet("negative power of zero".into()));
        }
        Ok(a.powi(p as i32))
    } else {
        if !(a.value() > 0.0) {
            return Err(Error::Domain(format!("fractional power of {}", a.value())));
        }
        Ok(a.powf(p))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(k, i) => write!(f, "{}{}", if *k == VarKind::X { 'x' } else { 'y' }, i),
            Expr::Neg(e) => match **e {
                // keep the literal from folding into a negative constant on re-parse
                Expr::Const(_) => write!(f, "(-({e}))"),
                _ => write!(f, "(-{e})"),
            },
            Expr::Binary(op, l, r) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {s} {r})")
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}
