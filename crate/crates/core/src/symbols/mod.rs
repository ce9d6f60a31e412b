//! Classical symbols, their calculus, and per-point slot computations.
//!
//! All operations work on [`SymbolJetStack`]s: the jets of the first few
//! homogeneous terms at one `(x, ξ)`. The functions at the bottom of this
//! module evaluate a symbol operation at a point through slot `n`.

mod calculus;
mod logpow;
mod ops;
mod stack;
mod symbol;

pub use calculus::{
    adjoint_stack_to, compose_stacks, compose_stacks_to, resolvent_stack, ResolventPlan,
};
pub use logpow::{
    log_abs_xi, log_stack, log_stack_to, power_series_stack, power_stack, power_stack_to,
    LogSymbol, PowerMethod,
};
pub use stack::{graded, SymbolJetStack};
pub use symbol::{is_integer, ClassicalSymbol, HomogeneousTerm, LadderFn, TermFn};

use crate::error::{Error, Result};
use crate::jets::{ContourSpec, Jet};
use crate::linalg::C64;

fn anchor_for(a: &ClassicalSymbol, x: &[f64], xi: &[f64]) -> Result<std::sync::Arc<crate::jets::Anchor>> {
    if x.len() != a.n() || xi.len() != a.n() {
        return Err(Error::ShapeMismatch(format!(
            "point of dimension {} for a symbol on T^{}",
            xi.len(),
            a.n()
        )));
    }
    Ok(a.anchor_at(x, xi))
}

/// Slots `0..=n` of `a ∘ b` at `(x, ξ)` (graded).
pub fn compose(
    a: &ClassicalSymbol,
    b: &ClassicalSymbol,
    x: &[f64],
    xi: &[f64],
) -> Result<SymbolJetStack> {
    let c = ClassicalSymbol::composed(a, b)?;
    let anchor = anchor_for(&c, x, xi)?;
    c.stack(&anchor, c.n())
}

/// `a + b` with ladders aligned by degree.
pub fn add_merge(a: &ClassicalSymbol, b: &ClassicalSymbol) -> Result<ClassicalSymbol> {
    ClassicalSymbol::add_merge(a, b)
}

pub fn adjoint(a: &ClassicalSymbol) -> ClassicalSymbol {
    a.adjoint()
}

/// Slots `0..=n` of `(a - λ)^{-1}` at `(x, ξ)`.
pub fn resolvent_slots(
    a: &ClassicalSymbol,
    lambda: C64,
    x: &[f64],
    xi: &[f64],
) -> Result<SymbolJetStack> {
    let anchor = anchor_for(a, x, xi)?;
    let sa = a.stack(&anchor, a.n())?;
    resolvent_stack(&sa, lambda)
}

/// Slots `0..=n` of the parametrix at `(x, ξ)`.
pub fn parametrix(a: &ClassicalSymbol, x: &[f64], xi: &[f64]) -> Result<SymbolJetStack> {
    let anchor = anchor_for(a, x, xi)?;
    let q = a.parametrix();
    q.stack(&anchor, a.n())
}

/// Log-symbol slots at one point.
#[derive(Debug, Clone)]
pub struct LogSlots {
    pub alpha: f64,
    /// `q_0, ..., q_n` (slot 0 includes `α log|ξ| I`).
    pub q: SymbolJetStack,
    /// `p_0 = q_0 - α log|ξ| I`, homogeneous of degree 0.
    pub p0: Jet,
}

/// Slots `q_0..q_n` of `log_θ a` at `(x, ξ)` with the slot-0 split.
pub fn log_slots(a: &ClassicalSymbol, theta: f64, x: &[f64], xi: &[f64]) -> Result<LogSlots> {
    log_slots_with(a, &ContourSpec::with_theta(theta), x, xi)
}

pub fn log_slots_with(
    a: &ClassicalSymbol,
    spec: &ContourSpec,
    x: &[f64],
    xi: &[f64],
) -> Result<LogSlots> {
    let anchor = anchor_for(a, x, xi)?;
    let log = a.log_symbol(spec);
    let q = log.q_stack(&anchor, &graded(a.n()))?;
    let mut p0 = q.slot(0).clone();
    p0.axpy(
        C64::new(-a.order(), 0.0),
        &log_abs_xi(&anchor, p0.order(), a.dim())?,
    );
    Ok(LogSlots {
        alpha: a.order(),
        q,
        p0,
    })
}

/// Slots `0..=n` of `a_θ^{-s}` at `(x, ξ)`.
pub fn power_slots(
    a: &ClassicalSymbol,
    s: C64,
    theta: f64,
    x: &[f64],
    xi: &[f64],
    method: PowerMethod,
) -> Result<SymbolJetStack> {
    power_slots_with(a, s, &ContourSpec::with_theta(theta), x, xi, method)
}

pub fn power_slots_with(
    a: &ClassicalSymbol,
    s: C64,
    spec: &ContourSpec,
    x: &[f64],
    xi: &[f64],
    method: PowerMethod,
) -> Result<SymbolJetStack> {
    let anchor = anchor_for(a, x, xi)?;
    let sa = a.stack(&anchor, a.n())?;
    match method {
        PowerMethod::Contour => power_stack(&sa, s, spec),
        PowerMethod::LogSeries => power_series_stack(&sa, s, spec),
    }
}

/// The finite symbol `(π_n a_0, π_{n-1} a_1, ..., π_0 a_n)` at `anchor`.
pub fn finite_project(
    a: &ClassicalSymbol,
    anchor: &std::sync::Arc<crate::jets::Anchor>,
    n: usize,
) -> Result<SymbolJetStack> {
    a.stack(anchor, n)
}

#[cfg(test)]
mod tests;
