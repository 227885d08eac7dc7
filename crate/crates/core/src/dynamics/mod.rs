//! Vector fields `ẋ = f(x)` and the scalar set functions `h_I`, `h_U`,
//! written in a small expression language.

mod expr;
mod interval;
mod parser;

pub use expr::{BinOp, Expr, Func};
pub use interval::Interval;
pub use parser::parse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSystem {
    pub dim: usize,
    pub components: Vec<Expr>,
}

impl DynamicsSystem {
    pub fn new(dim: usize, components: Vec<Expr>) -> Result<Self> {
        if components.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} components for a system of dimension {}",
                components.len(),
                dim
            )));
        }
        if let Some(e) = components.iter().find(|e| e.arity() > dim) {
            return Err(Error::VariableOutOfRange {
                index: e.arity(),
                dim,
            });
        }
        Ok(DynamicsSystem { dim, components })
    }

    /// Parses one expression per state coordinate.
    pub fn parse<S: AsRef<str>>(texts: &[S], dim: usize) -> Result<Self> {
        let components = texts
            .iter()
            .map(|t| parse(t.as_ref(), dim))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, components)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|e| e.eval(x)).collect()
    }

    /// `f(x) = F x + c` when every component is syntactically affine.
    pub fn affine_decomposition(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut rows = Vec::with_capacity(self.dim);
        let mut consts = Vec::with_capacity(self.dim);
        for e in &self.components {
            let (r, c) = e.linear_form(self.dim)?;
            rows.push(r);
            consts.push(c);
        }
        Some((rows, consts))
    }

    pub fn is_polynomial(&self) -> bool {
        self.components.iter().all(Expr::is_polynomial)
    }

    /// The scalar expression `Σ w_i f_i(x)`, skipping zero weights.
    pub fn directional(&self, w: &[f64]) -> Expr {
        let mut terms = w
            .iter()
            .zip(&self.components)
            .filter(|(wi, _)| **wi != 0.0)
            .map(|(wi, f)| Expr::binary(BinOp::Mul, Expr::Const(*wi), f.clone()));
        match terms.next() {
            None => Expr::Const(0.0),
            Some(first) => terms.fold(first, |acc, t| Expr::binary(BinOp::Add, acc, t)),
        }
    }
}

/// `f(x) = F x + c`.
pub fn is_affine(sys: &DynamicsSystem) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    sys.affine_decomposition()
}

/// Benchmark systems and set functions from the barrier-certificate literature.
pub mod systems {
    pub const ARCH3: [&str; 2] = ["x1 - x1^3 + x2 - x1*x2^2", "-x1 + x2 - x1^2*x2 - x2^3"];

    pub const COMPLEX: [&str; 3] = [
        "-x1*(1 + sin(x2)^2 + exp(-x3^2))",
        "-x2*(1 + cos(x3)^2 + tanh(x1^2))",
        "-x3*(1 + ln(1 + x1^2 + x2^2))",
    ];

    pub const LINEAR4D: [&str; 4] = ["-x1", "x1 - 2*x2", "x1 - 4*x3", "x1 - 3*x4"];

    pub fn decay() -> Vec<String> {
        let radius = (1..=6)
            .map(|i| format!("x{i}^2"))
            .collect::<Vec<_>>()
            .join(" + ");
        (1..=6).map(|i| format!("-x{i}*(1 + {radius})")).collect()
    }

    /// `r² - Σ (x_i - c_i)²`, positive inside the ball.
    pub fn ball(center: &[f64], radius_sq: f64) -> String {
        let mut s = format!("{radius_sq}");
        for (i, c) in center.iter().enumerate() {
            if *c == 0.0 {
                s.push_str(&format!(" - x{}^2", i + 1));
            } else if *c > 0.0 {
                s.push_str(&format!(" - (x{} - {c})^2", i + 1));
            } else {
                s.push_str(&format!(" - (x{} + {})^2", i + 1, -c));
            }
        }
        s
    }

    /// Initial set used across the benchmarks: ball of radius 0.2 at the origin.
    pub fn initial_set(n: usize) -> String {
        ball(&vec![0.0; n], 0.04)
    }

    /// Unsafe set used across the benchmarks: unit ball at `(3, …, 3)`.
    pub fn unsafe_set(n: usize) -> String {
        ball(&vec![3.0; n], 1.0)
    }
}
