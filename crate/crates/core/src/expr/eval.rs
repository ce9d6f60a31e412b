use std::cell::OnceCell;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Expr, Func};
use crate::error::{Error, Result};
use crate::geometry::{MetricJets, TorusChart};
use crate::jets::{Anchor, Jet};
use crate::linalg::C64;

/// Smallest admissible modulus of a denominator.
const DIVISION_FLOOR: f64 = 1e-12;

/// Where an expression is evaluated: the chart supplies the metric
/// primitives, `dim` the size of `I` and of the result.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub chart: &'a TorusChart,
    pub dim: usize,
}

enum Value {
    Scalar(Jet),
    Matrix(Jet),
}

struct JetEval<'a> {
    ctx: EvalContext<'a>,
    anchor: &'a Arc<Anchor>,
    order: usize,
    metric: OnceCell<MetricJets>,
}

fn domain(msg: impl Into<String>) -> Error {
    Error::EvaluationDomain(msg.into())
}

impl JetEval<'_> {
    fn metric(&self) -> Result<&MetricJets> {
        if let Some(m) = self.metric.get() {
            return Ok(m);
        }
        let m = self.ctx.chart.metric_jets(self.anchor, self.order)?;
        Ok(self.metric.get_or_init(|| m))
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.anchor.n() {
            return Err(domain(format!(
                "index {} exceeds the torus dimension {}",
                k + 1,
                self.anchor.n()
            )));
        }
        Ok(())
    }

    fn scalar(&self, v: C64) -> Value {
        Value::Scalar(Jet::scalar(self.anchor, self.order, v))
    }

    fn as_matrix(&self, v: Value) -> Jet {
        match v {
            Value::Scalar(s) => s.times_identity(self.ctx.dim),
            Value::Matrix(m) => m,
        }
    }

    fn eval(&self, e: &Expr) -> Result<Value> {
        Ok(match e {
            Expr::Num(v) => self.scalar(C64::new(*v, 0.0)),
            Expr::Imag(v) => self.scalar(C64::new(0.0, *v)),
            Expr::Pi => self.scalar(C64::new(std::f64::consts::PI, 0.0)),
            Expr::X(k) => {
                self.check_index(*k)?;
                Value::Scalar(Jet::coordinate_x(self.anchor, self.order, *k))
            }
            Expr::Xi(k) => {
                self.check_index(*k)?;
                Value::Scalar(Jet::coordinate_xi(self.anchor, self.order, *k))
            }
            Expr::Gup(k, l) => {
                self.check_index(*k)?;
                self.check_index(*l)?;
                Value::Scalar(self.metric()?.ginv.entry(*k, *l))
            }
            Expr::SqrtDetG => Value::Scalar(self.metric()?.sqrt_det.clone()),
            Expr::AbsXiG => {
                let ginv = &self.metric()?.ginv;
                let n = self.anchor.n();
                let mut q = Jet::zero(self.anchor, self.order, 1);
                let xi: Vec<Jet> = (0..n)
                    .map(|i| Jet::coordinate_xi(self.anchor, self.order, i))
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        let t = &(&ginv.entry(i, j) * &xi[i]) * &xi[j];
                        q.axpy(C64::new(1.0, 0.0), &t);
                    }
                }
                if q.value()[0].norm() < DIVISION_FLOOR {
                    return Err(domain("absxi_g at xi = 0"));
                }
                Value::Scalar(q.sqrt()?)
            }
            Expr::Identity => Value::Matrix(Jet::identity(self.anchor, self.order, self.ctx.dim)),
            Expr::Matrix(rows) => {
                let dim = rows.len();
                if dim != self.ctx.dim {
                    return Err(Error::ShapeMismatch(format!(
                        "{dim}x{dim} matrix literal in a rank-{} term",
                        self.ctx.dim
                    )));
                }
                let entries = rows
                    .iter()
                    .flatten()
                    .map(|e| match self.eval(e)? {
                        Value::Scalar(s) => Ok(s),
                        Value::Matrix(_) => Err(domain("matrix entries must be scalars")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Value::Matrix(Jet::from_entries(&entries, dim)?)
            }
            Expr::Ray { positive, index } => {
                self.check_index(*index)?;
                let v = self.anchor.xi[*index];
                if v == 0.0 {
                    return Err(domain("ray selector at xi = 0"));
                }
                let on = (v > 0.0) == *positive;
                self.scalar(C64::new(if on { 1.0 } else { 0.0 }, 0.0))
            }
            Expr::Neg(a) => match self.eval(a)? {
                Value::Scalar(s) => Value::Scalar(-&s),
                Value::Matrix(m) => Value::Matrix(-&m),
            },
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let sign = if matches!(e, Expr::Add(..)) { 1.0 } else { -1.0 };
                match (self.eval(a)?, self.eval(b)?) {
                    (Value::Scalar(x), Value::Scalar(y)) => {
                        let mut x = x;
                        x.axpy(C64::new(sign, 0.0), &y);
                        Value::Scalar(x)
                    }
                    (x, y) => {
                        let mut x = self.as_matrix(x);
                        x.axpy(C64::new(sign, 0.0), &self.as_matrix(y));
                        Value::Matrix(x)
                    }
                }
            }
            Expr::Mul(a, b) => match (self.eval(a)?, self.eval(b)?) {
                (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(&x * &y),
                (Value::Matrix(x), Value::Matrix(y)) => Value::Matrix(&x * &y),
                (Value::Scalar(s), Value::Matrix(m)) | (Value::Matrix(m), Value::Scalar(s)) => {
                    Value::Matrix(s.scalar_mul(&m)?)
                }
            },
            Expr::Div(a, b) => {
                let d = match self.eval(b)? {
                    Value::Scalar(d) => d,
                    Value::Matrix(_) => return Err(domain("division by a matrix")),
                };
                if d.value()[0].norm() < DIVISION_FLOOR {
                    return Err(domain(format!("division by zero in '{b}'")));
                }
                let inv = d.inverse().map_err(|_| domain(format!("division by zero in '{b}'")))?;
                match self.eval(a)? {
                    Value::Scalar(x) => Value::Scalar(&x * &inv),
                    Value::Matrix(m) => Value::Matrix(inv.scalar_mul(&m)?),
                }
            }
            Expr::Pow(a, k) => {
                let base = self.eval(a)?;
                let jet = match &base {
                    Value::Scalar(s) | Value::Matrix(s) => s,
                };
                if *k < 0 && crate::linalg::max_abs(jet.value()) < DIVISION_FLOOR {
                    return Err(domain(format!("negative power of zero in '{a}'")));
                }
                let p = jet
                    .powi(*k)
                    .map_err(|_| domain(format!("singular base in '{a}'")))?;
                match base {
                    Value::Scalar(_) => Value::Scalar(p),
                    Value::Matrix(_) => Value::Matrix(p),
                }
            }
            Expr::Call(f, a) => {
                let s = match self.eval(a)? {
                    Value::Scalar(s) => s,
                    Value::Matrix(_) => return Err(domain("functions take scalar arguments")),
                };
                Value::Scalar(match f {
                    Func::Cos => s.cos(),
                    Func::Sin => s.sin(),
                    Func::Exp => s.exp(),
                })
            }
        })
    }
}

/// Jet of `e` at `anchor` to total degree `order`, as a `dim x dim` matrix
/// jet (scalar results are multiplied by the identity).
pub fn eval_jet(e: &Expr, ctx: EvalContext<'_>, anchor: &Arc<Anchor>, order: usize) -> Result<Jet> {
    let ev = JetEval {
        ctx,
        anchor,
        order,
        metric: OnceCell::new(),
    };
    let v = ev.eval(e)?;
    Ok(ev.as_matrix(v))
}

/// Value of an expression at one point, computed without jets.
#[derive(Debug, Clone)]
pub enum PointValue {
    Scalar(C64),
    Matrix(DMatrix<C64>),
}

impl PointValue {
    pub fn into_matrix(self, dim: usize) -> DMatrix<C64> {
        match self {
            PointValue::Scalar(s) => DMatrix::identity(dim, dim) * s,
            PointValue::Matrix(m) => m,
        }
    }
}

struct PointEval<'a> {
    ctx: EvalContext<'a>,
    x: &'a [f64],
    xi: &'a [f64],
}

impl PointEval<'_> {
    fn index(&self, k: usize) -> Result<usize> {
        if k >= self.xi.len() {
            return Err(domain(format!("index {} out of range", k + 1)));
        }
        Ok(k)
    }

    fn metric(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let g = self.ctx.chart.metric.eval(self.xi.len(), self.x);
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| domain("singular metric"))?;
        Ok((g, ginv))
    }

    fn eval(&self, e: &Expr) -> Result<PointValue> {
        use PointValue::{Matrix, Scalar};
        let dim = self.ctx.dim;
        Ok(match e {
            Expr::Num(v) => Scalar(C64::new(*v, 0.0)),
            Expr::Imag(v) => Scalar(C64::new(0.0, *v)),
            Expr::Pi => Scalar(C64::new(std::f64::consts::PI, 0.0)),
            Expr::X(k) => Scalar(C64::new(self.x[self.index(*k)?], 0.0)),
            Expr::Xi(k) => Scalar(C64::new(self.xi[self.index(*k)?], 0.0)),
            Expr::Gup(k, l) => {
                let (_, ginv) = self.metric()?;
                Scalar(C64::new(ginv[(self.index(*k)?, self.index(*l)?)], 0.0))
            }
            Expr::SqrtDetG => Scalar(C64::new(self.metric()?.0.determinant().sqrt(), 0.0)),
            Expr::AbsXiG => {
                let (_, ginv) = self.metric()?;
                let n = self.xi.len();
                let mut q = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        q += ginv[(i, j)] * self.xi[i] * self.xi[j];
                    }
                }
                Scalar(C64::new(q.sqrt(), 0.0))
            }
            Expr::Identity => Matrix(DMatrix::identity(dim, dim)),
            Expr::Matrix(rows) => {
                let d = rows.len();
                let mut m = DMatrix::zeros(d, d);
                for (r, row) in rows.iter().enumerate() {
                    for (c, v) in row.iter().enumerate() {
                        m[(r, c)] = match self.eval(v)? {
                            Scalar(s) => s,
                            Matrix(_) => return Err(domain("matrix entries must be scalars")),
                        };
                    }
                }
                Matrix(m)
            }
            Expr::Ray { positive, index } => {
                let v = self.xi[self.index(*index)?];
                Scalar(C64::new(if (v > 0.0) == *positive { 1.0 } else { 0.0 }, 0.0))
            }
            Expr::Neg(a) => match self.eval(a)? {
                Scalar(s) => Scalar(-s),
                Matrix(m) => Matrix(-m),
            },
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let sign = if matches!(e, Expr::Add(..)) { 1.0 } else { -1.0 };
                match (self.eval(a)?, self.eval(b)?) {
                    (Scalar(x), Scalar(y)) => Scalar(x + y * sign),
                    (x, y) => Matrix(x.into_matrix(dim) + y.into_matrix(dim) * C64::new(sign, 0.0)),
                }
            }
            Expr::Mul(a, b) => match (self.eval(a)?, self.eval(b)?) {
                (Scalar(x), Scalar(y)) => Scalar(x * y),
                (Matrix(x), Matrix(y)) => Matrix(x * y),
                (Scalar(s), Matrix(m)) | (Matrix(m), Scalar(s)) => Matrix(m * s),
            },
            Expr::Div(a, b) => {
                let d = match self.eval(b)? {
                    Scalar(d) => d,
                    Matrix(_) => return Err(domain("division by a matrix")),
                };
                if d.norm() < DIVISION_FLOOR {
                    return Err(domain("division by zero"));
                }
                match self.eval(a)? {
                    Scalar(x) => Scalar(x / d),
                    Matrix(m) => Matrix(m / d),
                }
            }
            Expr::Pow(a, k) => match self.eval(a)? {
                Scalar(s) => Scalar(s.powi(*k)),
                Matrix(m) => {
                    let base = if *k < 0 {
                        m.try_inverse().ok_or_else(|| domain("singular matrix power"))?
                    } else {
                        m
                    };
                    let mut acc = DMatrix::identity(base.nrows(), base.nrows());
                    for _ in 0..k.unsigned_abs() {
                        acc = &acc * &base;
                    }
                    Matrix(acc)
                }
            },
            Expr::Call(f, a) => match self.eval(a)? {
                Scalar(s) => Scalar(match f {
                    Func::Cos => s.cos(),
                    Func::Sin => s.sin(),
                    Func::Exp => s.exp(),
                }),
                Matrix(_) => return Err(domain("functions take scalar arguments")),
            },
        })
    }
}

/// Direct pointwise evaluation, independent of the jet machinery.
pub fn eval_point(e: &Expr, ctx: EvalContext<'_>, x: &[f64], xi: &[f64]) -> Result<PointValue> {
    PointEval { ctx, x, xi }.eval(e)
}
