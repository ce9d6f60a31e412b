use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::{Anchor, Jet};
use crate::linalg::C64;

/// Jets of the homogeneous terms of one symbol at a single point.
///
/// Slot `j` holds the jet of the degree `α - j` term. In a *graded* stack of
/// top `T` the slot `j` has jet order `T - j`, which is exactly the finite
/// symbol projection `(π_T a_0, π_{T-1} a_1, ..., π_0 a_T)`. Other order
/// profiles appear as intermediate inputs to the Leibniz recursions.
#[derive(Debug, Clone)]
pub struct SymbolJetStack {
    anchor: Arc<Anchor>,
    dim: usize,
    slots: Vec<Jet>,
}

/// Order profile `T, T-1, ..., 0`.
pub fn graded(top: usize) -> Vec<usize> {
    (0..=top).rev().collect()
}

/// Input orders needed so that a Leibniz sum over `|μ| + k + l = j` can
/// produce output slot `j` at order `out[j]`: `max_{j >= k} out[j] + j - k`.
pub(crate) fn leibniz_requirement(out: &[usize]) -> Vec<usize> {
    (0..out.len())
        .map(|k| (k..out.len()).map(|j| out[j] + j - k).max().unwrap_or(0))
        .collect()
}

impl SymbolJetStack {
    pub fn new(anchor: Arc<Anchor>, dim: usize, slots: Vec<Jet>) -> Result<Self> {
        for s in &slots {
            if s.dim() != dim || **s.anchor() != *anchor {
                return Err(Error::ShapeMismatch(
                    "stack slots must share anchor and matrix size".into(),
                ));
            }
        }
        Ok(SymbolJetStack { anchor, dim, slots })
    }

    pub(crate) fn from_slots_unchecked(anchor: Arc<Anchor>, dim: usize, slots: Vec<Jet>) -> Self {
        SymbolJetStack { anchor, dim, slots }
    }

    pub fn zeros(anchor: &Arc<Anchor>, dim: usize, orders: &[usize]) -> Self {
        SymbolJetStack {
            anchor: anchor.clone(),
            dim,
            slots: orders.iter().map(|&o| Jet::zero(anchor, o, dim)).collect(),
        }
    }

    /// `(I, 0, ..., 0)`.
    pub fn identity(anchor: &Arc<Anchor>, dim: usize, orders: &[usize]) -> Self {
        let mut s = Self::zeros(anchor, dim, orders);
        if let Some(first) = s.slots.first_mut() {
            *first = Jet::identity(anchor, orders[0], dim);
        }
        s
    }

    pub fn anchor(&self) -> &Arc<Anchor> {
        &self.anchor
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[Jet] {
        &self.slots
    }

    pub fn slot(&self, j: usize) -> &Jet {
        &self.slots[j]
    }

    pub fn into_slots(self) -> Vec<Jet> {
        self.slots
    }

    pub fn orders(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.order()).collect()
    }

    /// True when slot `j` has order `len - 1 - j`.
    pub fn is_graded(&self) -> bool {
        let top = self.len().saturating_sub(1);
        self.slots.iter().enumerate().all(|(j, s)| s.order() == top - j)
    }

    /// Truncates to the given order profile (fewer slots and/or lower orders).
    pub fn project(&self, orders: &[usize]) -> Result<Self> {
        if orders.len() > self.len() {
            return Err(Error::TruncationUnderflow {
                needed: orders.len() - 1,
                available: self.len(),
            });
        }
        let slots = self
            .slots
            .iter()
            .zip(orders)
            .map(|(s, &o)| s.taylor_project(o as i64))
            .collect::<Result<Vec<_>>>()?;
        Ok(SymbolJetStack {
            anchor: self.anchor.clone(),
            dim: self.dim,
            slots,
        })
    }

    /// Graded projection to top `top`.
    pub fn project_graded(&self, top: usize) -> Result<Self> {
        self.project(&graded(top))
    }

    pub fn scale(&self, c: C64) -> Self {
        SymbolJetStack {
            anchor: self.anchor.clone(),
            dim: self.dim,
            slots: self.slots.iter().map(|s| s.scale(c)).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.try_add(b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.try_sub(b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Jet, &Jet) -> Result<Jet>) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "stacks of {} and {} slots",
                self.len(),
                other.len()
            )));
        }
        let slots = self
            .slots
            .iter()
            .zip(&other.slots)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(SymbolJetStack {
            anchor: self.anchor.clone(),
            dim: self.dim,
            slots,
        })
    }

    pub(crate) fn slots_mut(&mut self) -> &mut Vec<Jet> {
        &mut self.slots
    }

    /// Largest coefficient difference over all slots (`INFINITY` on shape
    /// mismatch).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.slots
            .iter()
            .zip(&other.slots)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, crate::linalg::nan_max)
    }

    pub fn max_abs(&self) -> f64 {
        self.slots.iter().map(|s| s.max_abs()).fold(0.0, crate::linalg::nan_max)
    }
}
