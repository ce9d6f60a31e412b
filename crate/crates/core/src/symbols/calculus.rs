//! Leibniz-type recursions on symbol stacks: composition, resolvent
//! (and hence parametrix), and formal adjoint.
//!
//! With `D_x = -i ∂_x`:
//!
//! * `(a∘b)_j = Σ_{|μ|+k+l=j} (1/μ!) ∂_ξ^μ a_k · D_x^μ b_l`
//! * `r_0 = (a_0 - λ)^{-1}`, `r_j = -r_0 Σ_{|μ|+k+l=j, l<j} (1/μ!) ∂_ξ^μ a_k · D_x^μ r_l`
//! * `(a*)_j = Σ_{|μ|+k=j} (1/μ!) ∂_ξ^μ D_x^μ a_k^H`

use std::sync::Arc;

use super::stack::{leibniz_requirement, SymbolJetStack};
use crate::error::{Error, Result};
use crate::jets::{basis, mul_acc_to, mul_to, Anchor, Jet};
use crate::linalg::C64;

const MINUS_I: C64 = C64::new(0.0, -1.0);

/// Multi-index derivative family of one jet, indexed like `basis(n, max)`.
struct Derivatives {
    max: usize,
    jets: Vec<Jet>,
}

impl Derivatives {
    /// `(1/μ!) ∂_ξ^μ s` (`xi = true`) or `D_x^μ s` (`xi = false`) for all
    /// `|μ| <= max`. Without x-variables only `μ = 0` is stored.
    fn new(s: &Jet, max: usize, xi: bool) -> Self {
        let anchor = s.anchor();
        let n = anchor.n();
        let max = max.min(s.order());
        if !xi && !anchor.with_x {
            return Derivatives {
                max: 0,
                jets: vec![s.clone()],
            };
        }
        let mb = basis(n, max);
        let mut jets: Vec<Jet> = Vec::with_capacity(mb.len());
        jets.push(s.clone());
        for k in 1..mb.len() {
            let e = mb.exponents(k);
            let v = e.iter().position(|&p| p > 0).expect("nonzero exponent");
            let mut parent = e.to_vec();
            parent[v] -= 1;
            let pidx = mb.index_of(&parent).expect("parent monomial");
            let d = if xi {
                jets[pidx].derivative_scaled(anchor.xi_var(v), C64::new(1.0 / e[v] as f64, 0.0))
            } else {
                let var = anchor.x_var(v).expect("anchor carries x");
                jets[pidx].derivative_scaled(var, MINUS_I)
            };
            jets.push(d);
        }
        Derivatives { max, jets }
    }

    /// Derivative jets with `|μ| = m`, paired with the monomial index.
    fn of_degree(&self, m: usize) -> impl Iterator<Item = (usize, &Jet)> {
        let n_range = if m > self.max {
            0..0
        } else {
            let n = self.jets[0].anchor().n();
            basis(n, self.max).degree_range(m)
        };
        n_range.map(move |k| (k, &self.jets[k]))
    }

    fn get(&self, k: usize) -> Option<&Jet> {
        self.jets.get(k)
    }
}

fn check_pair(a: &SymbolJetStack, b: &SymbolJetStack) -> Result<()> {
    if **a.anchor() != **b.anchor() || a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(
            "stacks differ in anchor or matrix size".into(),
        ));
    }
    Ok(())
}

fn check_orders(stack: &SymbolJetStack, need: &[usize], what: &str) -> Result<()> {
    if stack.len() < need.len() {
        return Err(Error::TruncationUnderflow {
            needed: need.len() - 1,
            available: stack.len(),
        });
    }
    for (j, (&have, &want)) in stack.orders().iter().zip(need).enumerate() {
        if have < want {
            return Err(Error::ShapeMismatch(format!(
                "{what}: slot {j} has jet order {have}, {want} required"
            )));
        }
    }
    Ok(())
}

/// Composition of two graded stacks of equal top.
pub fn compose_stacks(a: &SymbolJetStack, b: &SymbolJetStack) -> Result<SymbolJetStack> {
    let orders = super::stack::graded(a.len().min(b.len()).saturating_sub(1));
    compose_stacks_to(a, b, &orders)
}

/// Composition producing slot `j` at order `orders[j]`.
pub fn compose_stacks_to(
    a: &SymbolJetStack,
    b: &SymbolJetStack,
    orders: &[usize],
) -> Result<SymbolJetStack> {
    check_pair(a, b)?;
    let need = leibniz_requirement(orders);
    check_orders(a, &need, "compose (left)")?;
    check_orders(b, &need, "compose (right)")?;
    let len = orders.len();
    let anchor = a.anchor().clone();
    let da: Vec<Derivatives> = (0..len)
        .map(|k| Derivatives::new(a.slot(k), len - 1 - k, true))
        .collect();
    let db: Vec<Derivatives> = (0..len)
        .map(|l| Derivatives::new(b.slot(l), len - 1 - l, false))
        .collect();
    let one = C64::new(1.0, 0.0);
    let mut slots = Vec::with_capacity(len);
    for (j, &oj) in orders.iter().enumerate() {
        let mut out = Jet::zero(&anchor, oj, a.dim());
        for k in 0..=j {
            for l in 0..=(j - k) {
                let m = j - k - l;
                for (idx, dak) in da[k].of_degree(m) {
                    if let Some(dbl) = db[l].get(idx) {
                        if m == 0 || anchor.with_x {
                            mul_acc_to(&mut out, one, dak, dbl);
                        }
                    }
                }
            }
        }
        slots.push(out);
    }
    Ok(SymbolJetStack::from_slots_unchecked(anchor, a.dim(), slots))
}

/// Precomputed λ-independent part of the resolvent recursion at one point.
pub struct ResolventPlan {
    anchor: Arc<Anchor>,
    dim: usize,
    orders: Vec<usize>,
    work: Vec<usize>,
    a0: Jet,
    da: Vec<Derivatives>,
}

impl ResolventPlan {
    /// Plan producing slot `j` of `(a - λ)^{-1}` at order `orders[j]`.
    pub fn new(a: &SymbolJetStack, orders: &[usize]) -> Result<Self> {
        let work = leibniz_requirement(orders);
        let need = leibniz_requirement(&work);
        check_orders(a, &need, "resolvent")?;
        let len = orders.len();
        let da = (0..len)
            .map(|k| Derivatives::new(a.slot(k), len - 1 - k, true))
            .collect();
        Ok(ResolventPlan {
            anchor: a.anchor().clone(),
            dim: a.dim(),
            orders: orders.to_vec(),
            a0: a.slot(0).truncate(work[0]),
            work,
            da,
        })
    }

    pub fn graded(a: &SymbolJetStack) -> Result<Self> {
        Self::new(a, &super::stack::graded(a.len().saturating_sub(1)))
    }

    /// Value of the principal term at the anchor.
    pub fn principal_value(&self) -> &[C64] {
        self.a0.value()
    }

    pub fn resolvent(&self, lambda: C64) -> Result<SymbolJetStack> {
        let dim = self.dim;
        let len = self.orders.len();
        let mut shift = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            shift[i * dim + i] = -lambda;
        }
        let r0 = self
            .a0
            .add_constant(&shift)
            .inverse()
            .map_err(|_| Error::ResolventSingular {
                re: lambda.re,
                im: lambda.im,
            })?;
        let one = C64::new(1.0, 0.0);
        let mut r: Vec<Jet> = Vec::with_capacity(len);
        let mut dr: Vec<Derivatives> = Vec::with_capacity(len);
        dr.push(Derivatives::new(&r0, len - 1, false));
        r.push(r0);
        for j in 1..len {
            let pj = self.work[j];
            let mut acc = Jet::zero(&self.anchor, pj, dim);
            for k in 0..=j {
                for l in 0..(j - k + 1).min(j) {
                    let m = j - k - l;
                    if m > 0 && !self.anchor.with_x {
                        continue;
                    }
                    for (idx, dak) in self.da[k].of_degree(m) {
                        if let Some(drl) = dr[l].get(idx) {
                            mul_acc_to(&mut acc, one, dak, drl);
                        }
                    }
                }
            }
            let rj = mul_to(&r[0], &acc, pj).scale(C64::new(-1.0, 0.0));
            if j + 1 < len {
                dr.push(Derivatives::new(&rj, len - 1 - j, false));
            }
            r.push(rj);
        }
        let slots = r
            .iter()
            .zip(&self.orders)
            .map(|(rj, &o)| rj.truncate(o))
            .collect();
        Ok(SymbolJetStack::from_slots_unchecked(
            self.anchor.clone(),
            dim,
            slots,
        ))
    }
}

/// Resolvent stack of a graded stack at `λ`.
pub fn resolvent_stack(a: &SymbolJetStack, lambda: C64) -> Result<SymbolJetStack> {
    ResolventPlan::graded(a)?.resolvent(lambda)
}

/// Adjoint-symbol requirement: `max_{j>=k} out[j] + 2 (j - k)`.
pub(crate) fn adjoint_requirement(out: &[usize]) -> Vec<usize> {
    (0..out.len())
        .map(|k| (k..out.len()).map(|j| out[j] + 2 * (j - k)).max().unwrap_or(0))
        .collect()
}

/// Formal adjoint producing slot `j` at order `orders[j]`.
pub fn adjoint_stack_to(a: &SymbolJetStack, orders: &[usize]) -> Result<SymbolJetStack> {
    let need = adjoint_requirement(orders);
    check_orders(a, &need, "adjoint")?;
    let anchor = a.anchor().clone();
    let len = orders.len();
    let mut slots: Vec<Jet> = orders
        .iter()
        .map(|&o| Jet::zero(&anchor, o, a.dim()))
        .collect();
    for k in 0..len {
        let h = a.slot(k).conj_transpose();
        let dx = Derivatives::new(&h, len - 1 - k, false);
        for m in 0..(len - k) {
            let j = k + m;
            if m > 0 && !anchor.with_x {
                break;
            }
            let n = anchor.n();
            let mb = basis(n, dx.max);
            for idx in mb.degree_range(m) {
                let e = mb.exponents(idx).to_vec();
                let mut t = dx.jets[idx].clone();
                for (v, &p) in e.iter().enumerate() {
                    for q in 0..p {
                        t = t.dxi(v).scale(C64::new(1.0 / (q + 1) as f64, 0.0));
                    }
                }
                slots[j].axpy(C64::new(1.0, 0.0), &t);
            }
        }
    }
    Ok(SymbolJetStack::from_slots_unchecked(anchor, a.dim(), slots))
}
