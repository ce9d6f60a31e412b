//! A small expression language for matrix-valued symbol terms.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' '-'? INT)?
//! atom    := NUMBER | NUMBER 'i' | '(' expr ')' | x(k) | xi(k) | gup(k,l)
//!          | sqrtdetg | absxi_g | I | i | pi | mat[[e, ...], ...]
//!          | cos(expr) | sin(expr) | exp(expr) | pos(xi(k)) | neg(xi(k))
//! ```
//!
//! Indices are 1-based. `cos`, `sin` and `exp` only accept arguments that do
//! not depend on `ξ`. See `docs/expr.md` for the full description.

mod eval;
mod parse;

use std::fmt;

pub use eval::{eval_jet, eval_point, EvalContext, PointValue};
pub use parse::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Cos,
    Sin,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Cos => "cos",
            Func::Sin => "sin",
            Func::Exp => "exp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Real literal.
    Num(f64),
    /// Imaginary literal `c i`.
    Imag(f64),
    Pi,
    /// `x(k)`, stored 0-based.
    X(usize),
    /// `xi(k)`, stored 0-based.
    Xi(usize),
    /// `gup(k, l)`, the inverse metric, stored 0-based.
    Gup(usize, usize),
    SqrtDetG,
    /// `sqrt(g^{ij} ξ_i ξ_j)`.
    AbsXiG,
    Identity,
    Matrix(Vec<Vec<Expr>>),
    /// `pos(xi(k))` (`positive = true`) or `neg(xi(k))`.
    Ray { positive: bool, index: usize },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// True if the expression mentions `ξ` (directly or via `absxi_g` or rays).
    pub fn depends_on_xi(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Xi(_) | Expr::AbsXiG | Expr::Ray { .. }))
    }

    /// True if the expression mentions `x` or a metric primitive.
    pub fn depends_on_x(&self, flat_metric: bool) -> bool {
        self.any(&|e| match e {
            Expr::X(_) => true,
            Expr::Gup(..) | Expr::SqrtDetG | Expr::AbsXiG => !flat_metric,
            _ => false,
        })
    }

    /// Largest 0-based coordinate index used, if any.
    pub fn max_index(&self) -> Option<usize> {
        let mut m: Option<usize> = None;
        self.visit(&mut |e| {
            let k = match e {
                Expr::X(k) | Expr::Xi(k) => Some(*k),
                Expr::Gup(k, l) => Some((*k).max(*l)),
                Expr::Ray { index, .. } => Some(*index),
                _ => None,
            };
            if let Some(k) = k {
                m = Some(m.map_or(k, |v| v.max(k)));
            }
        });
        m
    }

    fn any(&self, p: &dyn Fn(&Expr) -> bool) -> bool {
        let mut hit = false;
        self.visit(&mut |e| hit |= p(e));
        hit
    }

    fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Matrix(rows) => rows.iter().flatten().for_each(|e| e.visit(f)),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn write_prec(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Imag(v) => write!(f, "{v}i"),
            Expr::Pi => write!(f, "pi"),
            Expr::X(k) => write!(f, "x({})", k + 1),
            Expr::Xi(k) => write!(f, "xi({})", k + 1),
            Expr::Gup(k, l) => write!(f, "gup({},{})", k + 1, l + 1),
            Expr::SqrtDetG => write!(f, "sqrtdetg"),
            Expr::AbsXiG => write!(f, "absxi_g"),
            Expr::Identity => write!(f, "I"),
            Expr::Matrix(rows) => {
                write!(f, "mat[")?;
                for (r, row) in rows.iter().enumerate() {
                    if r > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "[")?;
                    for (c, e) in row.iter().enumerate() {
                        if c > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{e}")?;
                    }
                    write!(f, "]")?;
                }
                write!(f, "]")
            }
            Expr::Ray { positive, index } => {
                let name = if *positive { "pos" } else { "neg" };
                write!(f, "{name}(xi({}))", index + 1)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_prec(f, a, 3)
            }
            Expr::Add(a, b) => {
                write_prec(f, a, 1)?;
                write!(f, "+")?;
                write_prec(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_prec(f, a, 1)?;
                write!(f, "-")?;
                write_prec(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_prec(f, a, 2)?;
                write!(f, "*")?;
                write_prec(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_prec(f, a, 2)?;
                write!(f, "/")?;
                write_prec(f, b, 3)
            }
            Expr::Pow(a, k) => {
                write_prec(f, a, 5)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests;
