//! Graded monomial bases and their product/derivative tables.
//!
//! Monomials are enumerated by total degree, and the enumeration within one
//! degree does not depend on the maximum order. The basis of order `m` is
//! therefore a prefix of the basis of any order `d >= m`, which turns Taylor
//! projection into truncation of the coefficient vector.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug)]
pub struct Basis {
    nvars: usize,
    order: usize,
    /// Flattened exponent vectors, `nvars` entries per monomial.
    exps: Vec<u8>,
    /// `offsets[t]` is the index of the first monomial of total degree `t`;
    /// `offsets[order + 1]` is the basis length.
    offsets: Vec<usize>,
    /// For every monomial `k`, the pairs `(i, j)` with `e_i + e_j = e_k`.
    products: Vec<Vec<(u32, u32)>>,
    /// For every variable, `(source, target, factor)` of `d/dv`.
    derivs: Vec<Vec<(u32, u32, f64)>>,
}

fn compositions(nvars: usize, total: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, left: usize, remaining: usize, out: &mut Vec<Vec<u8>>) {
        if remaining == 1 {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k as u8);
            rec(prefix, left - k, remaining - 1, out);
            prefix.pop();
        }
    }
    if nvars == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return;
    }
    rec(&mut Vec::with_capacity(nvars), total, nvars, out);
}

impl Basis {
    fn build(nvars: usize, order: usize) -> Self {
        let mut monos: Vec<Vec<u8>> = Vec::new();
        let mut offsets = Vec::with_capacity(order + 2);
        for t in 0..=order {
            offsets.push(monos.len());
            compositions(nvars, t, &mut monos);
        }
        offsets.push(monos.len());
        let index: HashMap<Vec<u8>, usize> = monos
            .iter()
            .enumerate()
            .map(|(k, e)| (e.clone(), k))
            .collect();
        let len = monos.len();

        let mut products = vec![Vec::new(); len];
        for (i, ei) in monos.iter().enumerate() {
            let di: usize = ei.iter().map(|&v| v as usize).sum();
            for (j, ej) in monos.iter().enumerate() {
                let dj: usize = ej.iter().map(|&v| v as usize).sum();
                if di + dj > order {
                    // monomials are sorted by degree
                    break;
                }
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                products[index[&sum]].push((i as u32, j as u32));
            }
        }

        let mut derivs = vec![Vec::new(); nvars];
        for (k, e) in monos.iter().enumerate() {
            for v in 0..nvars {
                if e[v] > 0 {
                    let mut lower = e.clone();
                    lower[v] -= 1;
                    derivs[v].push((k as u32, index[&lower] as u32, e[v] as f64));
                }
            }
        }

        Basis {
            nvars,
            order,
            exps: monos.concat(),
            offsets,
            products,
            derivs,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.offsets[self.order + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of monomials of total degree at most `m`.
    pub fn len_upto(&self, m: usize) -> usize {
        self.offsets[m.min(self.order) + 1]
    }

    /// Indices of the monomials of total degree exactly `t`.
    pub fn degree_range(&self, t: usize) -> std::ops::Range<usize> {
        if t > self.order {
            return 0..0;
        }
        self.offsets[t]..self.offsets[t + 1]
    }

    pub fn exponents(&self, k: usize) -> &[u8] {
        &self.exps[k * self.nvars..(k + 1) * self.nvars]
    }

    pub fn degree(&self, k: usize) -> usize {
        self.exponents(k).iter().map(|&v| v as usize).sum()
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        if exps.len() != self.nvars {
            return None;
        }
        let t: usize = exps.iter().map(|&v| v as usize).sum();
        if t > self.order {
            return None;
        }
        (self.offsets[t]..self.offsets[t + 1]).find(|&k| self.exponents(k) == exps)
    }

    pub(crate) fn products(&self, k: usize) -> &[(u32, u32)] {
        &self.products[k]
    }

    pub(crate) fn derivs(&self, var: usize) -> &[(u32, u32, f64)] {
        &self.derivs[var]
    }
}

type Cache = Mutex<HashMap<(usize, usize), Arc<Basis>>>;

/// Shared basis for `nvars` variables truncated at total degree `order`.
pub fn basis(nvars: usize, order: usize) -> Arc<Basis> {
    const SLOTS: usize = 32;
    thread_local! {
        static LOCAL: RefCell<Vec<Option<Arc<Basis>>>> = RefCell::new(vec![None; SLOTS * SLOTS]);
    }
    if nvars < SLOTS && order < SLOTS {
        let key = nvars * SLOTS + order;
        if let Some(b) = LOCAL.with(|l| l.borrow()[key].clone()) {
            return b;
        }
        let b = shared_basis(nvars, order);
        LOCAL.with(|l| l.borrow_mut()[key] = Some(b.clone()));
        return b;
    }
    shared_basis(nvars, order)
}

fn shared_basis(nvars: usize, order: usize) -> Arc<Basis> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("basis cache poisoned");
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Basis::build(nvars, order)))
        .clone()
}
