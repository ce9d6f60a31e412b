use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::basis::{basis, Basis};
use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};

/// Condition-number cap for inverting a jet's constant term.
pub const CONDITION_CAP: f64 = 1e12;

/// Expansion point `(x, xi)` of a jet.
///
/// When `with_x` is false the jet only carries the `xi` variables; every
/// `x`-derivative of such a jet vanishes. This is how x-independent symbols
/// skip half of the Taylor variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub with_x: bool,
}

impl Anchor {
    pub fn new(x: Vec<f64>, xi: Vec<f64>, with_x: bool) -> Arc<Self> {
        assert_eq!(x.len(), xi.len(), "x and xi must have the same length");
        Arc::new(Anchor { x, xi, with_x })
    }

    /// Torus dimension.
    pub fn n(&self) -> usize {
        self.xi.len()
    }

    /// Number of Taylor variables.
    pub fn nvars(&self) -> usize {
        if self.with_x {
            2 * self.n()
        } else {
            self.n()
        }
    }

    /// Variable index of `dx_i` (0-based), if the jet carries x-variables.
    pub fn x_var(&self, i: usize) -> Option<usize> {
        self.with_x.then_some(i)
    }

    /// Variable index of `dxi_i` (0-based).
    pub fn xi_var(&self, i: usize) -> usize {
        if self.with_x {
            self.n() + i
        } else {
            i
        }
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Same point with `xi` scaled by `t`.
    pub fn scaled(&self, t: f64) -> Arc<Self> {
        Arc::new(Anchor {
            x: self.x.clone(),
            xi: self.xi.iter().map(|v| v * t).collect(),
            with_x: self.with_x,
        })
    }
}

/// Truncated multivariate Taylor polynomial with square complex-matrix
/// coefficients, expanded around an [`Anchor`].
///
/// Coefficients of monomials above the jet's order are never stored and
/// never produced.
#[derive(Clone)]
pub struct Jet {
    anchor: Arc<Anchor>,
    basis: Arc<Basis>,
    dim: usize,
    coeffs: Vec<C64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_map();
        let bs = self.dim * self.dim;
        for k in 0..self.basis.len() {
            let c = &self.coeffs[k * bs..(k + 1) * bs];
            if c.iter().any(|z| *z != ZERO) {
                s.entry(&self.basis.exponents(k), &c);
            }
        }
        s.finish()
    }
}

fn same_anchor(a: &Arc<Anchor>, b: &Arc<Anchor>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Jet {
    pub fn zero(anchor: &Arc<Anchor>, order: usize, dim: usize) -> Self {
        let basis = basis(anchor.nvars(), order);
        let len = basis.len() * dim * dim;
        Jet {
            anchor: anchor.clone(),
            basis,
            dim,
            coeffs: vec![ZERO; len],
        }
    }

    /// Jet with the given constant `dim x dim` row-major value.
    pub fn constant(anchor: &Arc<Anchor>, order: usize, dim: usize, value: &[C64]) -> Self {
        assert_eq!(value.len(), dim * dim);
        let mut j = Self::zero(anchor, order, dim);
        j.coeffs[..dim * dim].copy_from_slice(value);
        j
    }

    pub fn identity(anchor: &Arc<Anchor>, order: usize, dim: usize) -> Self {
        Self::constant(anchor, order, dim, &linalg::identity(dim))
    }

    pub fn scalar(anchor: &Arc<Anchor>, order: usize, value: C64) -> Self {
        Self::constant(anchor, order, 1, &[value])
    }

    /// Scalar jet of the coordinate function `x_i` (0-based): `x0_i + dx_i`.
    pub fn coordinate_x(anchor: &Arc<Anchor>, order: usize, i: usize) -> Self {
        let mut j = Self::scalar(anchor, order, C64::new(anchor.x[i], 0.0));
        if let Some(v) = anchor.x_var(i) {
            j.set_linear(v, ONE);
        }
        j
    }

    /// Scalar jet of the coordinate function `xi_i` (0-based).
    pub fn coordinate_xi(anchor: &Arc<Anchor>, order: usize, i: usize) -> Self {
        let mut j = Self::scalar(anchor, order, C64::new(anchor.xi[i], 0.0));
        j.set_linear(anchor.xi_var(i), ONE);
        j
    }

    fn set_linear(&mut self, var: usize, value: C64) {
        if self.basis.order() == 0 {
            return;
        }
        let mut e = vec![0u8; self.basis.nvars()];
        e[var] = 1;
        let k = self.basis.index_of(&e).expect("linear monomial");
        self.coeffs[k] = value;
    }

    pub fn anchor(&self) -> &Arc<Anchor> {
        &self.anchor
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn nvars(&self) -> usize {
        self.basis.nvars()
    }

    fn block(&self) -> usize {
        self.dim * self.dim
    }

    /// Row-major value of the constant term.
    pub fn value(&self) -> &[C64] {
        &self.coeffs[..self.block()]
    }

    /// Coefficient block of the monomial with the given exponents, or `None`
    /// if the monomial lies above the jet's order.
    pub fn coeff(&self, exps: &[u8]) -> Option<&[C64]> {
        let bs = self.block();
        self.basis
            .index_of(exps)
            .map(|k| &self.coeffs[k * bs..(k + 1) * bs])
    }

    pub fn coeff_mut(&mut self, exps: &[u8]) -> Option<&mut [C64]> {
        let bs = self.block();
        self.basis
            .index_of(exps)
            .map(move |k| &mut self.coeffs[k * bs..(k + 1) * bs])
    }

    #[cfg(test)]
    pub(crate) fn raw_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Coefficient of a monomial in `x`/`xi` exponents (0 when absent).
    pub fn coeff_xxi(&self, x_exps: &[u8], xi_exps: &[u8]) -> Vec<C64> {
        let n = self.anchor.n();
        let mut e = vec![0u8; self.nvars()];
        if !self.anchor.with_x && x_exps.iter().any(|&v| v > 0) {
            return vec![ZERO; self.block()];
        }
        for i in 0..n {
            if let Some(v) = self.anchor.x_var(i) {
                e[v] = x_exps[i];
            }
            e[self.anchor.xi_var(i)] = xi_exps[i];
        }
        self.coeff(&e)
            .map(|c| c.to_vec())
            .unwrap_or_else(|| vec![ZERO; self.block()])
    }

    fn check_shape(&self, other: &Jet) -> Result<()> {
        if !same_anchor(&self.anchor, &other.anchor) {
            return Err(Error::ShapeMismatch(format!(
                "anchors differ: {:?} vs {:?}",
                self.anchor, other.anchor
            )));
        }
        if self.order() != other.order() {
            return Err(Error::ShapeMismatch(format!(
                "orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!(
                "matrix sizes differ: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    /// Truncated product `self * other` (matrix order preserved).
    pub fn product(&self, other: &Jet) -> Result<Jet> {
        self.check_shape(other)?;
        Ok(mul_to(self, other, self.order()))
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Jet {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// `self += s * other` where `other` has order at least `self.order()`.
    pub(crate) fn axpy(&mut self, s: C64, other: &Jet) {
        debug_assert_eq!(self.dim, other.dim);
        debug_assert!(other.order() >= self.order());
        let len = self.coeffs.len();
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs[..len]) {
            *a += s * b;
        }
    }

    /// Adds `value` (row-major) to the constant term.
    pub fn add_constant(&self, value: &[C64]) -> Jet {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(value) {
            *a += b;
        }
        out
    }

    /// Two-sided inverse via the degree-by-degree recursion
    /// `b_k = -a_0^{-1} sum_{i>0} a_i b_j`.
    pub fn inverse(&self) -> Result<Jet> {
        let dim = self.dim;
        let bs = self.block();
        let (a0inv, cond) = linalg::inverse(self.value(), dim).ok_or(Error::SingularJet {
            cond: f64::INFINITY,
        })?;
        if cond > CONDITION_CAP {
            return Err(Error::SingularJet { cond });
        }
        let len = self.basis.len();
        let mut out = vec![ZERO; len * bs];
        out[..bs].copy_from_slice(&a0inv);
        let mut acc = vec![ZERO; bs];
        for k in 1..len {
            acc.iter_mut().for_each(|z| *z = ZERO);
            for &(i, j) in self.basis.products(k) {
                let (i, j) = (i as usize, j as usize);
                if i == 0 {
                    continue;
                }
                linalg::mul_acc(
                    &mut acc,
                    &self.coeffs[i * bs..(i + 1) * bs],
                    &out[j * bs..(j + 1) * bs],
                    dim,
                );
            }
            let bk = &mut out[k * bs..(k + 1) * bs];
            linalg::mul_acc(bk, &a0inv, &acc, dim);
            bk.iter_mut().for_each(|z| *z = -*z);
        }
        Ok(Jet {
            anchor: self.anchor.clone(),
            basis: self.basis.clone(),
            dim,
            coeffs: out,
        })
    }

    /// Drops every coefficient of total degree above `m`.
    pub fn taylor_project(&self, m: i64) -> Result<Jet> {
        if m < 0 || m as usize > self.order() {
            return Err(Error::InvalidProjection {
                requested: m,
                order: self.order(),
            });
        }
        Ok(self.truncate(m as usize))
    }

    pub(crate) fn truncate(&self, m: usize) -> Jet {
        debug_assert!(m <= self.order());
        if m == self.order() {
            return self.clone();
        }
        let b = basis(self.nvars(), m);
        let len = b.len() * self.block();
        Jet {
            anchor: self.anchor.clone(),
            basis: b,
            dim: self.dim,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    /// Partial derivative in Taylor variable `var`; the order drops by one.
    /// Differentiating an order-0 jet yields an order-0 zero jet.
    pub fn derivative(&self, var: usize) -> Jet {
        self.derivative_scaled(var, ONE)
    }

    /// `s * ∂/∂var` in one pass.
    pub(crate) fn derivative_scaled(&self, var: usize, s: C64) -> Jet {
        let order = self.order().saturating_sub(1);
        let mut out = Jet::zero(&self.anchor, order, self.dim);
        if self.order() == 0 {
            return out;
        }
        let bs = self.block();
        let len = out.basis.len();
        for &(src, dst, f) in self.basis.derivs(var) {
            let (src, dst) = (src as usize, dst as usize);
            if dst >= len {
                continue;
            }
            for t in 0..bs {
                out.coeffs[dst * bs + t] = self.coeffs[src * bs + t] * (s * f);
            }
        }
        out
    }

    /// `d/dx_i`; zero when the jet carries no x-variables.
    pub fn dx(&self, i: usize) -> Jet {
        match self.anchor.x_var(i) {
            Some(v) => self.derivative(v),
            None => Jet::zero(&self.anchor, self.order().saturating_sub(1), self.dim),
        }
    }

    pub fn dxi(&self, i: usize) -> Jet {
        self.derivative(self.anchor.xi_var(i))
    }

    /// Entrywise complex conjugate followed by transposition of every
    /// coefficient block. The Taylor variables are real, so this is the jet
    /// of the pointwise adjoint.
    pub fn conj_transpose(&self) -> Jet {
        let d = self.dim;
        let bs = self.block();
        let mut out = self.clone();
        for k in 0..self.basis.len() {
            for i in 0..d {
                for j in 0..d {
                    out.coeffs[k * bs + i * d + j] = self.coeffs[k * bs + j * d + i].conj();
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Jet {
        let d = self.dim;
        let bs = self.block();
        let mut out = Jet::zero(&self.anchor, self.order(), 1);
        for k in 0..self.basis.len() {
            out.coeffs[k] = (0..d).map(|i| self.coeffs[k * bs + i * d + i]).sum();
        }
        out
    }

    /// Scalar jet of matrix entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> Jet {
        let d = self.dim;
        let bs = self.block();
        let mut out = Jet::zero(&self.anchor, self.order(), 1);
        for k in 0..self.basis.len() {
            out.coeffs[k] = self.coeffs[k * bs + i * d + j];
        }
        out
    }

    /// Assemble a matrix jet from scalar jets given row-major.
    pub fn from_entries(entries: &[Jet], dim: usize) -> Result<Jet> {
        if entries.len() != dim * dim || entries.is_empty() {
            return Err(Error::ShapeMismatch("entry count".into()));
        }
        let first = &entries[0];
        for e in entries {
            first.check_shape(e)?;
            if e.dim != 1 {
                return Err(Error::ShapeMismatch("entries must be scalar jets".into()));
            }
        }
        let mut out = Jet::zero(&first.anchor, first.order(), dim);
        let bs = dim * dim;
        for k in 0..first.basis.len() {
            for (t, e) in entries.iter().enumerate() {
                out.coeffs[k * bs + t] = e.coeffs[k];
            }
        }
        Ok(out)
    }

    /// Product of a scalar jet with a matrix jet (either side may be scalar).
    pub fn scalar_mul(&self, other: &Jet) -> Result<Jet> {
        let (s, m) = match (self.dim, other.dim) {
            (1, _) => (self, other),
            (_, 1) => (other, self),
            _ => return Err(Error::ShapeMismatch("scalar_mul needs a scalar factor".into())),
        };
        if !same_anchor(&s.anchor, &m.anchor) || s.order() != m.order() {
            return Err(Error::ShapeMismatch("scalar_mul anchor/order".into()));
        }
        let bs = m.block();
        let mut out = Jet::zero(&m.anchor, m.order(), m.dim);
        for k in 0..m.basis.len() {
            for &(i, j) in m.basis.products(k) {
                let (i, j) = (i as usize, j as usize);
                let si = s.coeffs[i];
                if si == ZERO {
                    continue;
                }
                for t in 0..bs {
                    out.coeffs[k * bs + t] += si * m.coeffs[j * bs + t];
                }
            }
        }
        Ok(out)
    }

    /// Embeds a scalar jet as `s * I_dim`.
    pub fn times_identity(&self, dim: usize) -> Jet {
        debug_assert_eq!(self.dim, 1);
        let mut out = Jet::zero(&self.anchor, self.order(), dim);
        let bs = dim * dim;
        for k in 0..self.basis.len() {
            for i in 0..dim {
                out.coeffs[k * bs + i * dim + i] = self.coeffs[k];
            }
        }
        out
    }

    /// Composes a scalar jet `u = c + h` with a univariate function given by
    /// its Taylor coefficients at `c`: `f(u) = sum_k coeffs[k] h^k`.
    pub fn compose_univariate(&self, taylor: &[C64]) -> Jet {
        debug_assert_eq!(self.dim, 1);
        let mut h = self.clone();
        h.coeffs[0] = ZERO;
        let order = self.order();
        let top = order.min(taylor.len().saturating_sub(1));
        let mut acc = Jet::scalar(&self.anchor, order, taylor[top]);
        for k in (0..top).rev() {
            acc = mul_to(&acc, &h, order);
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let c = self.coeffs[0];
        let ec = c.exp();
        let mut t = Vec::with_capacity(self.order() + 1);
        let mut fact = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                fact *= k as f64;
            }
            t.push(ec / fact);
        }
        self.compose_univariate(&t)
    }

    /// Principal-branch logarithm of a scalar jet.
    pub fn ln(&self) -> Result<Jet> {
        let c = self.coeffs[0];
        if c.norm() == 0.0 {
            return Err(Error::EvaluationDomain("logarithm of zero".into()));
        }
        let mut t = vec![c.ln()];
        let mut p = ONE;
        for k in 1..=self.order() {
            p /= c;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(p * (sign / k as f64));
        }
        Ok(self.compose_univariate(&t))
    }

    /// `u^p` for complex `p` on the principal branch.
    pub fn powc(&self, p: C64) -> Result<Jet> {
        let c = self.coeffs[0];
        if c.norm() == 0.0 {
            return Err(Error::EvaluationDomain("power of zero".into()));
        }
        let mut t = Vec::with_capacity(self.order() + 1);
        let mut binom = ONE;
        for k in 0..=self.order() {
            if k > 0 {
                binom = binom * (p - C64::new((k - 1) as f64, 0.0)) / k as f64;
            }
            t.push(binom * c.powc(p - C64::new(k as f64, 0.0)));
        }
        Ok(self.compose_univariate(&t))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powc(C64::new(0.5, 0.0))
    }

    pub fn cos(&self) -> Jet {
        self.trig(false)
    }

    pub fn sin(&self) -> Jet {
        self.trig(true)
    }

    fn trig(&self, sine: bool) -> Jet {
        let c = self.coeffs[0];
        let (s, co) = (c.sin(), c.cos());
        // derivatives of sin: sin, cos, -sin, -cos; of cos: cos, -sin, -cos, sin
        let cycle = if sine { [s, co, -s, -co] } else { [co, -s, -co, s] };
        let mut t = Vec::with_capacity(self.order() + 1);
        let mut fact = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                fact *= k as f64;
            }
            t.push(cycle[k % 4] / fact);
        }
        self.compose_univariate(&t)
    }

    /// Integer power by repeated squaring (negative powers via `inverse`).
    pub fn powi(&self, p: i32) -> Result<Jet> {
        let base = if p < 0 { self.inverse()? } else { self.clone() };
        let mut e = p.unsigned_abs();
        let mut acc = Jet::identity(&self.anchor, self.order(), self.dim);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_to(&acc, &b, self.order());
            }
            e >>= 1;
            if e > 0 {
                b = mul_to(&b, &b, self.order());
            }
        }
        Ok(acc)
    }

    /// Largest coefficient difference; `INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        if self.check_shape(other).is_err() {
            return f64::INFINITY;
        }
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, linalg::nan_max)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.coeffs)
    }

    /// Evaluates the Taylor polynomial at the displacement `delta` (one entry
    /// per Taylor variable).
    pub fn eval_at(&self, delta: &[f64]) -> Vec<C64> {
        let bs = self.block();
        let mut out = vec![ZERO; bs];
        for k in 0..self.basis.len() {
            let mono: f64 = self
                .basis
                .exponents(k)
                .iter()
                .zip(delta)
                .map(|(&e, &d)| d.powi(e as i32))
                .product();
            for t in 0..bs {
                out[t] += self.coeffs[k * bs + t] * mono;
            }
        }
        out
    }
}

/// Truncated product at `order`, which may be lower than the operands' orders.
pub(crate) fn mul_to(a: &Jet, b: &Jet, order: usize) -> Jet {
    debug_assert!(order <= a.order() && order <= b.order());
    debug_assert_eq!(a.dim, b.dim);
    let dim = a.dim;
    let bs = dim * dim;
    let mut out = Jet::zero(&a.anchor, order, dim);
    let basis = out.basis.clone();
    for k in 0..basis.len() {
        let o = &mut out.coeffs[k * bs..(k + 1) * bs];
        for &(i, j) in basis.products(k) {
            let (i, j) = (i as usize, j as usize);
            linalg::mul_acc(
                o,
                &a.coeffs[i * bs..(i + 1) * bs],
                &b.coeffs[j * bs..(j + 1) * bs],
                dim,
            );
        }
    }
    out
}

/// `out += s * a * b` truncated at `out.order()`.
pub(crate) fn mul_acc_to(out: &mut Jet, s: C64, a: &Jet, b: &Jet) {
    let order = out.order();
    debug_assert!(order <= a.order() && order <= b.order());
    let dim = a.dim;
    let bs = dim * dim;
    let basis = out.basis.clone();
    if s == ONE {
        for k in 0..basis.len() {
            let o = &mut out.coeffs[k * bs..(k + 1) * bs];
            for &(i, j) in basis.products(k) {
                let (i, j) = (i as usize, j as usize);
                linalg::mul_acc(
                    o,
                    &a.coeffs[i * bs..(i + 1) * bs],
                    &b.coeffs[j * bs..(j + 1) * bs],
                    dim,
                );
            }
        }
        return;
    }
    let mut tmp = vec![ZERO; bs];
    for k in 0..basis.len() {
        tmp.iter_mut().for_each(|z| *z = ZERO);
        for &(i, j) in basis.products(k) {
            let (i, j) = (i as usize, j as usize);
            linalg::mul_acc(
                &mut tmp,
                &a.coeffs[i * bs..(i + 1) * bs],
                &b.coeffs[j * bs..(j + 1) * bs],
                dim,
            );
        }
        for (o, t) in out.coeffs[k * bs..(k + 1) * bs].iter_mut().zip(&tmp) {
            *o += s * t;
        }
    }
}

/// Product of two jets truncated to the smaller of their orders.
pub fn product_truncated(a: &Jet, b: &Jet) -> Result<Jet> {
    if !same_anchor(&a.anchor, &b.anchor) || a.dim != b.dim {
        return Err(Error::ShapeMismatch("anchor or matrix size".into()));
    }
    Ok(mul_to(a, b, a.order().min(b.order())))
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet addition shape")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet subtraction shape")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs).expect("jet product shape")
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-ONE)
    }
}
