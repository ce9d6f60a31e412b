//! Small dense complex matrix kernels on row-major slices.
//!
//! Jet coefficients are stored as contiguous `dim * dim` blocks, so the hot
//! loops work directly on slices instead of allocating matrix objects.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// `out += a * b` for `dim x dim` row-major blocks.
#[inline]
pub(crate) fn mul_acc(out: &mut [C64], a: &[C64], b: &[C64], dim: usize) {
    if dim == 1 {
        out[0] += a[0] * b[0];
        return;
    }
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == ZERO {
                continue;
            }
            let row = &b[k * dim..(k + 1) * dim];
            let o = &mut out[i * dim..(i + 1) * dim];
            for j in 0..dim {
                o[j] += aik * row[j];
            }
        }
    }
}

pub(crate) fn mul(a: &[C64], b: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![ZERO; dim * dim];
    mul_acc(&mut out, a, b, dim);
    out
}

pub(crate) fn identity(dim: usize) -> Vec<C64> {
    let mut m = vec![ZERO; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = ONE;
    }
    m
}

pub(crate) fn norm1(a: &[C64], dim: usize) -> f64 {
    (0..dim)
        .map(|j| (0..dim).map(|i| a[i * dim + j].norm()).sum::<f64>())
        .fold(0.0, nan_max)
}

/// `max` that propagates NaN instead of dropping it.
pub(crate) fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub(crate) fn max_abs(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, nan_max)
}

pub(crate) fn trace(a: &[C64], dim: usize) -> C64 {
    (0..dim).map(|i| a[i * dim + i]).sum()
}

/// Inverse by Gaussian elimination with partial pivoting, together with the
/// 1-norm condition number. `None` when a pivot vanishes.
pub(crate) fn inverse(a: &[C64], dim: usize) -> Option<(Vec<C64>, f64)> {
    if dim == 1 {
        if a[0] == ZERO {
            return None;
        }
        return Some((vec![ONE / a[0]], 1.0));
    }
    let mut m = a.to_vec();
    let mut inv = identity(dim);
    for col in 0..dim {
        let (piv, pmax) = (col..dim)
            .map(|r| (r, m[r * dim + col].norm()))
            .fold((col, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pmax == 0.0 {
            return None;
        }
        if piv != col {
            for j in 0..dim {
                m.swap(col * dim + j, piv * dim + j);
                inv.swap(col * dim + j, piv * dim + j);
            }
        }
        let p = ONE / m[col * dim + col];
        for j in 0..dim {
            m[col * dim + j] *= p;
            inv[col * dim + j] *= p;
        }
        for r in 0..dim {
            if r == col {
                continue;
            }
            let f = m[r * dim + col];
            if f == ZERO {
                continue;
            }
            for j in 0..dim {
                let mv = m[col * dim + j];
                let iv = inv[col * dim + j];
                m[r * dim + j] -= f * mv;
                inv[r * dim + j] -= f * iv;
            }
        }
    }
    let cond = norm1(a, dim) * norm1(&inv, dim);
    if !cond.is_finite() {
        return None;
    }
    Some((inv, cond))
}

/// Eigenvalues of a small complex matrix. Closed forms for `dim <= 2`,
/// complex Schur decomposition otherwise.
pub(crate) fn eigenvalues(a: &[C64], dim: usize) -> Vec<C64> {
    match dim {
        1 => vec![a[0]],
        2 => {
            let tr = a[0] + a[3];
            let det = a[0] * a[3] - a[1] * a[2];
            let half = tr * 0.5;
            let disc = (half * half - det).sqrt();
            vec![half + disc, half - disc]
        }
        _ => {
            let m = DMatrix::from_row_slice(dim, dim, a);
            let schur = nalgebra::linalg::Schur::new(m);
            let (_, t) = schur.unpack();
            (0..dim).map(|i| t[(i, i)]).collect()
        }
    }
}
