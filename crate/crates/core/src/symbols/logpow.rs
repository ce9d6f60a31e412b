//! Logarithm and complex powers of symbols at one point.
//!
//! Both are contour integrals of the resolvent stack,
//! `q_j = (i/2π) ∮ log_θ λ · r(λ)_j dλ` and likewise with `λ^{-s}`, over
//! circles fitted to the spectrum of the principal term at the anchor. The
//! power can also be formed as `Σ_k (-s)^k/k! (log a)^{∘k}`.

use std::sync::Arc;

use super::calculus::{compose_stacks, ResolventPlan};
use super::stack::{graded, leibniz_requirement, SymbolJetStack};
use super::symbol::ClassicalSymbol;
use crate::error::{Error, Result};
use crate::jets::{log_theta, pow_theta, Anchor, ContourSpec, Jet};
use crate::linalg::{self, C64};

/// How `a^{-s}` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMethod {
    Contour,
    LogSeries,
}

const SERIES_CAP: usize = 300;
const SERIES_TOL: f64 = 1e-16;

fn contour_sum(
    a: &SymbolJetStack,
    orders: &[usize],
    spec: &ContourSpec,
    f: impl Fn(C64) -> C64,
) -> Result<SymbolJetStack> {
    let plan = ResolventPlan::new(a, orders)?;
    let eigs = linalg::eigenvalues(plan.principal_value(), a.dim());
    let spec = spec.fitted(&eigs)?;
    let mut out = SymbolJetStack::zeros(a.anchor(), a.dim(), orders);
    for (lambda, w) in spec.quadrature(f) {
        let r = plan.resolvent(lambda)?;
        for (o, rj) in out.slots_mut().iter_mut().zip(r.slots()) {
            o.axpy(w, rj);
        }
    }
    Ok(out)
}

/// Slots of `log_θ a` at the orders `orders`; `a` must carry the orders of
/// a double Leibniz requirement (a graded stack of the same top suffices for
/// graded output).
pub fn log_stack_to(
    a: &SymbolJetStack,
    orders: &[usize],
    spec: &ContourSpec,
) -> Result<SymbolJetStack> {
    let theta = spec.theta;
    contour_sum(a, orders, spec, |l| log_theta(l, theta))
}

/// Graded log stack of a graded stack.
pub fn log_stack(a: &SymbolJetStack, spec: &ContourSpec) -> Result<SymbolJetStack> {
    log_stack_to(a, &graded(a.len().saturating_sub(1)), spec)
}

/// Slots of `a_θ^{-s}` by contour quadrature; `s = 0` gives `(I, 0, ...)`.
pub fn power_stack_to(
    a: &SymbolJetStack,
    s: C64,
    orders: &[usize],
    spec: &ContourSpec,
) -> Result<SymbolJetStack> {
    if s == C64::new(0.0, 0.0) {
        let eigs = linalg::eigenvalues(a.slot(0).value(), a.dim());
        spec.check_admissible(&eigs)?;
        return Ok(SymbolJetStack::identity(a.anchor(), a.dim(), orders));
    }
    let theta = spec.theta;
    contour_sum(a, orders, spec, |l| pow_theta(l, s, theta))
}

pub fn power_stack(a: &SymbolJetStack, s: C64, spec: &ContourSpec) -> Result<SymbolJetStack> {
    power_stack_to(a, s, &graded(a.len().saturating_sub(1)), spec)
}

/// `a^{-s} = Σ_k (-s)^k/k! (log a)^{∘k}` with adaptive truncation.
pub fn power_series_stack(
    a: &SymbolJetStack,
    s: C64,
    spec: &ContourSpec,
) -> Result<SymbolJetStack> {
    let top = a.len().saturating_sub(1);
    let log = log_stack(a, spec)?;
    let mut sum = SymbolJetStack::identity(a.anchor(), a.dim(), &graded(top));
    let mut term = sum.clone();
    let mut small = 0;
    for k in 1..=SERIES_CAP {
        term = compose_stacks(&term, &log)?.scale(-s / k as f64);
        sum = sum.try_add(&term)?;
        let t = term.max_abs();
        if !t.is_finite() {
            return Err(Error::SeriesNotConverged { terms: k, tail: t });
        }
        if t <= SERIES_TOL * sum.max_abs().max(1.0) {
            small += 1;
            if small == 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNotConverged {
        terms: SERIES_CAP,
        tail: term.max_abs(),
    })
}

/// Jet of `log |ξ|` at the anchor, as a scalar multiple of the identity.
pub fn log_abs_xi(anchor: &Arc<Anchor>, order: usize, dim: usize) -> Result<Jet> {
    let mut sq = Jet::zero(anchor, order, 1);
    for i in 0..anchor.n() {
        let c = Jet::coordinate_xi(anchor, order, i);
        sq.axpy(C64::new(1.0, 0.0), &(&c * &c));
    }
    Ok(sq.ln()?.scale(C64::new(0.5, 0.0)).times_identity(dim))
}

/// Log-symbol `log_θ a ~ α log|ξ| I + Σ_j q'_j` of an elliptic classical
/// symbol of order `α`.
///
/// The classical part is an order-0 classical symbol whose slot 0 is
/// `p_0 = q_0 - α log|ξ| I`; slots `j >= 1` agree with those of `log_θ a`.
#[derive(Clone, Debug)]
pub struct LogSymbol {
    pub alpha: f64,
    pub theta: f64,
    classical: ClassicalSymbol,
    source: ClassicalSymbol,
    spec: ContourSpec,
}

impl LogSymbol {
    pub fn new(a: &ClassicalSymbol, spec: &ContourSpec) -> Self {
        let alpha = a.order();
        let (src, sp) = (a.clone(), spec.clone());
        let classical = ClassicalSymbol::derived(
            a.n(),
            a.dim(),
            0.0,
            a.x_independent(),
            a.depth(),
            Arc::new(move |anchor, orders| {
                let mut q = LogSymbol::q_slots(&src, &sp, anchor, orders)?;
                if alpha != 0.0 && !orders.is_empty() {
                    let l = log_abs_xi(anchor, orders[0], src.dim())?;
                    q.slots_mut()[0].axpy(C64::new(-alpha, 0.0), &l);
                }
                Ok(q)
            }),
        )
        .with_label(format!("log({})", a.label()));
        LogSymbol {
            alpha,
            theta: spec.theta,
            classical,
            source: a.clone(),
            spec: spec.clone(),
        }
    }

    fn q_slots(
        a: &ClassicalSymbol,
        spec: &ContourSpec,
        anchor: &Arc<Anchor>,
        orders: &[usize],
    ) -> Result<SymbolJetStack> {
        let need = leibniz_requirement(&leibniz_requirement(orders));
        let sa = a.eval_slots(anchor, &need)?;
        log_stack_to(&sa, orders, spec).map_err(|e| match e {
            Error::ResolventSingular { .. } | Error::SingularJet { .. } => Error::NotElliptic {
                x: anchor.x.clone(),
                xi: anchor.xi.clone(),
            },
            other => other,
        })
    }

    /// Full slots `q_j` (slot 0 includes `α log|ξ| I`).
    pub fn q_stack(&self, anchor: &Arc<Anchor>, orders: &[usize]) -> Result<SymbolJetStack> {
        Self::q_slots(&self.source, &self.spec, anchor, orders)
    }

    /// The order-0 classical part `(p_0, q_1, q_2, ...)`.
    pub fn classical_part(&self) -> &ClassicalSymbol {
        &self.classical
    }

    /// `α I`, the coefficient of `log|ξ|`.
    pub fn log_coefficient(&self) -> Vec<C64> {
        linalg::identity(self.source.dim())
            .into_iter()
            .map(|z| z * self.alpha)
            .collect()
    }
}
