use std::fmt;

use serde::{Deserialize, Serialize};

use super::interval::Interval;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Tanh,
    Exp,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            _ => return None,
        })
    }

    pub fn apply(self, v: f64) -> Result<f64> {
        Ok(match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tanh => v.tanh(),
            Func::Exp => v.exp(),
            Func::Ln => {
                if v <= 0.0 {
                    return Err(Error::Domain(format!("ln of non-positive value {v}")));
                }
                v.ln()
            }
        })
    }
}

/// Expression over variables `x1..xn` (stored zero-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    /// Largest variable index plus one (0 for constant expressions).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Var(i) => i + 1,
            Expr::Const(_) => 0,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.arity(),
            Expr::Binary(_, a, b) => a.arity().max(b.arity()),
        }
    }

    /// No function calls and no division by a non-constant.
    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Const(_) => true,
            Expr::Neg(e) | Expr::Pow(e, _) => e.is_polynomial(),
            Expr::Call(..) => false,
            Expr::Binary(BinOp::Div, a, b) => {
                a.is_polynomial() && b.arity() == 0 && b.is_polynomial()
            }
            Expr::Binary(_, a, b) => a.is_polynomial() && b.is_polynomial(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Var(i) => *x.get(*i).ok_or_else(|| {
                Error::DimensionMismatch(format!(
                    "x{} not provided (got {} values)",
                    i + 1,
                    x.len()
                ))
            })?,
            Expr::Const(c) => *c,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::Domain("division by zero".into()));
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(e, k) => e.eval(x)?.powi(*k as i32),
            Expr::Call(f, e) => f.apply(e.eval(x)?)?,
        })
    }

    /// Natural interval extension: the result encloses `eval(x)` for every
    /// `x` in the box.
    pub fn eval_interval(&self, bx: &[Interval]) -> Result<Interval> {
        Ok(match self {
            Expr::Var(i) => *bx.get(*i).ok_or_else(|| {
                Error::DimensionMismatch(format!("x{} not covered by the box", i + 1))
            })?,
            Expr::Const(c) => Interval::point(*c),
            Expr::Neg(e) => -e.eval_interval(bx)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval_interval(bx)?, b.eval_interval(bx)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.checked_div(b)?,
                }
            }
            Expr::Pow(e, k) => e.eval_interval(bx)?.powi(*k),
            Expr::Call(f, e) => {
                let v = e.eval_interval(bx)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tanh => v.tanh(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln()?,
                }
            }
        })
    }

    /// `(coefficients, constant)` if the expression is syntactically of degree at most one.
    pub fn linear_form(&self, n: usize) -> Option<(Vec<f64>, f64)> {
        match self {
            Expr::Var(i) => {
                if *i >= n {
                    return None;
                }
                let mut c = vec![0.0; n];
                c[*i] = 1.0;
                Some((c, 0.0))
            }
            Expr::Const(c) => Some((vec![0.0; n], *c)),
            Expr::Neg(e) => e
                .linear_form(n)
                .map(|(c, k)| (c.iter().map(|v| -v).collect(), -k)),
            Expr::Binary(op, a, b) => {
                let (ca, ka) = a.linear_form(n)?;
                let (cb, kb) = b.linear_form(n)?;
                let is_const = |c: &[f64]| c.iter().all(|v| *v == 0.0);
                match op {
                    BinOp::Add => Some((ca.iter().zip(&cb).map(|(u, v)| u + v).collect(), ka + kb)),
                    BinOp::Sub => Some((ca.iter().zip(&cb).map(|(u, v)| u - v).collect(), ka - kb)),
                    BinOp::Mul if is_const(&ca) => {
                        Some((cb.iter().map(|v| v * ka).collect(), kb * ka))
                    }
                    BinOp::Mul if is_const(&cb) => {
                        Some((ca.iter().map(|v| v * kb).collect(), ka * kb))
                    }
                    BinOp::Div if is_const(&cb) && kb != 0.0 => {
                        Some((ca.iter().map(|v| v / kb).collect(), ka / kb))
                    }
                    _ => None,
                }
            }
            Expr::Pow(e, k) => match k {
                0 => Some((vec![0.0; n], 1.0)),
                1 => e.linear_form(n),
                _ => {
                    let (c, v) = e.linear_form(n)?;
                    c.iter().all(|x| *x == 0.0).then(|| (c, v.powi(*k as i32)))
                }
            },
            Expr::Call(f, e) => {
                let (c, v) = e.linear_form(n)?;
                if c.iter().any(|x| *x != 0.0) {
                    return None;
                }
                f.apply(v).ok().map(|r| (c, r))
            }
        }
    }
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{c:?}")
    }
}

/// Fully parenthesised text that re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(e, k) => write!(f, "({e}^{k})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}
