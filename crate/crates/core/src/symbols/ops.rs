//! Symbol-level constructions built on the stack recursions.

use std::sync::Arc;

use super::calculus::{adjoint_requirement, adjoint_stack_to, ResolventPlan};
use super::logpow::{power_series_stack, power_stack_to, LogSymbol, PowerMethod};
use super::stack::{graded, leibniz_requirement};
use super::symbol::{is_integer, ClassicalSymbol};
use crate::error::{Error, Result};
use crate::jets::ContourSpec;
use crate::linalg::{self, C64};

fn min_depth(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl ClassicalSymbol {
    /// Formal adjoint `a* ~ Σ_μ (1/μ!) ∂_ξ^μ D_x^μ a^H`.
    pub fn adjoint(&self) -> ClassicalSymbol {
        let a = self.clone();
        ClassicalSymbol::derived(
            self.n(),
            self.dim(),
            self.order(),
            self.x_independent(),
            self.depth(),
            Arc::new(move |anchor, orders| {
                let sa = a.eval_slots(anchor, &adjoint_requirement(orders))?;
                adjoint_stack_to(&sa, orders)
            }),
        )
        .with_label(format!("({})*", self.label()))
    }

    /// Term-wise sum after aligning the ladders by degree. The orders must
    /// differ by an integer.
    pub fn add_merge(a: &ClassicalSymbol, b: &ClassicalSymbol) -> Result<ClassicalSymbol> {
        if a.n() != b.n() || a.dim() != b.dim() {
            return Err(Error::ShapeMismatch("add: chart or rank differ".into()));
        }
        let gap = a.order() - b.order();
        if !is_integer(gap) {
            return Err(Error::OrderMismatch(a.order(), b.order()));
        }
        let (hi, lo) = if gap >= 0.0 { (a, b) } else { (b, a) };
        let shift = gap.abs().round() as usize;
        let depth = min_depth(hi.depth(), lo.depth().map(|d| d + shift));
        let (h, l) = (hi.clone(), lo.clone());
        Ok(ClassicalSymbol::derived(
            a.n(),
            a.dim(),
            hi.order(),
            a.x_independent() && b.x_independent(),
            depth,
            Arc::new(move |anchor, orders| {
                let mut s = h.eval_slots(anchor, orders)?;
                if orders.len() > shift {
                    let t = l.eval_slots(anchor, &orders[shift..])?;
                    for (o, v) in s.slots_mut()[shift..].iter_mut().zip(t.slots()) {
                        o.axpy(C64::new(1.0, 0.0), v);
                    }
                }
                Ok(s)
            }),
        )
        .with_label(format!("{} + {}", a.label(), b.label())))
    }

    /// `a + c I` with `c` placed in the degree-0 slot (integer order `>= 0`).
    pub fn shifted(&self, c: C64) -> Result<ClassicalSymbol> {
        if !is_integer(self.order()) || self.order() < 0.0 {
            return Err(Error::OrderMismatch(self.order(), 0.0));
        }
        let k = ClassicalSymbol::scalar_constant(self.n(), self.dim(), c);
        Ok(ClassicalSymbol::add_merge(self, &k)?.with_label(format!("{} + {c}", self.label())))
    }

    /// Parametrix `Q ~ Σ r(0)_j`: the resolvent recursion at `λ = 0`.
    pub fn parametrix(&self) -> ClassicalSymbol {
        let a = self.clone();
        ClassicalSymbol::derived(
            self.n(),
            self.dim(),
            -self.order(),
            self.x_independent(),
            self.depth(),
            Arc::new(move |anchor, orders| {
                let need = leibniz_requirement(&leibniz_requirement(orders));
                let sa = a.eval_slots(anchor, &need)?;
                ResolventPlan::new(&sa, orders)?
                    .resolvent(C64::new(0.0, 0.0))
                    .map_err(|_| Error::NotElliptic {
                        x: anchor.x.clone(),
                        xi: anchor.xi.clone(),
                    })
            }),
        )
        .with_label(format!("({})^-1", self.label()))
    }

    /// The log-symbol for the contour of `spec`.
    pub fn log_symbol(&self, spec: &ContourSpec) -> LogSymbol {
        LogSymbol::new(self, spec)
    }

    /// `a_θ^{-s}` for real `s`, a classical symbol of order `-s α`.
    pub fn power_symbol(&self, s: f64, spec: &ContourSpec, method: PowerMethod) -> ClassicalSymbol {
        let a = self.clone();
        let sp = spec.clone();
        let sc = C64::new(s, 0.0);
        ClassicalSymbol::derived(
            self.n(),
            self.dim(),
            -s * self.order(),
            self.x_independent(),
            self.depth(),
            Arc::new(move |anchor, orders| match method {
                PowerMethod::Contour => {
                    let need = leibniz_requirement(&leibniz_requirement(orders));
                    let sa = a.eval_slots(anchor, &need)?;
                    power_stack_to(&sa, sc, orders, &sp)
                }
                PowerMethod::LogSeries => {
                    let top = orders
                        .iter()
                        .enumerate()
                        .map(|(j, &o)| o + j)
                        .max()
                        .unwrap_or(0);
                    let sa = a.eval_slots(anchor, &graded(top))?;
                    power_series_stack(&sa, sc, &sp)?.project(orders)
                }
            }),
        )
        .with_label(format!("({})^{}", self.label(), -s))
    }

    /// Slot-0 value `log det a_0(x, ξ)` for the principal angle `theta`.
    pub fn log_det_principal(&self, x: &[f64], xi: &[f64], theta: f64) -> Result<C64> {
        let a0 = self.term_value(0, x, xi)?;
        let eigs = linalg::eigenvalues(&a0, self.dim());
        let spec = ContourSpec::with_theta(theta);
        spec.check_admissible(&eigs)?;
        if eigs.iter().any(|e| e.norm() == 0.0) {
            return Err(Error::NotElliptic {
                x: x.to_vec(),
                xi: xi.to_vec(),
            });
        }
        Ok(eigs
            .iter()
            .map(|&e| crate::jets::log_theta(e, theta))
            .sum())
    }
}
