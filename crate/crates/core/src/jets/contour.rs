//! Contour-integral functional calculus for matrix jets.
//!
//! `f(a) = (i/2π) ∮ f(λ) (a - λ)^{-1} dλ` over a union of counter-clockwise
//! circles that enclose the spectrum of the constant term and avoid the cut
//! `R_θ = { r e^{iθ} : r >= 0 }`. Each circle is discretised by the periodic
//! trapezoid rule, which converges geometrically for analytic integrands.

use std::f64::consts::PI;

use super::jet::Jet;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: C64,
    pub radius: f64,
}

/// Contour parameters plus the circles fitted to one spectrum.
///
/// An empty `circles` list means "fit to the constant term on use".
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    pub theta: f64,
    pub nodes_per_circle: usize,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Relative distance to the cut below which an eigenvalue is rejected.
    pub cut_tolerance: f64,
    pub circles: Vec<Circle>,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            theta: PI,
            nodes_per_circle: 64,
            min_radius: 1e-8,
            max_radius: 1e8,
            cut_tolerance: 1e-9,
            circles: Vec::new(),
        }
    }
}

/// `arg_θ(λ) ∈ [θ - 2π, θ)`.
pub fn arg_theta(lambda: C64, theta: f64) -> f64 {
    let mut a = lambda.arg();
    while a >= theta {
        a -= 2.0 * PI;
    }
    while a < theta - 2.0 * PI {
        a += 2.0 * PI;
    }
    a
}

/// `log_θ λ = log|λ| + i arg_θ(λ)`.
pub fn log_theta(lambda: C64, theta: f64) -> C64 {
    C64::new(lambda.norm().ln(), arg_theta(lambda, theta))
}

/// `λ_θ^{-s} = exp(-s log_θ λ)`.
pub fn pow_theta(lambda: C64, s: C64, theta: f64) -> C64 {
    (-s * log_theta(lambda, theta)).exp()
}

/// Distance from `z` to the closed ray `R_θ`, which includes the origin.
pub fn distance_to_cut(z: C64, theta: f64) -> f64 {
    let rotated = z * C64::from_polar(1.0, -theta);
    if rotated.re <= 0.0 {
        z.norm()
    } else {
        rotated.im.abs()
    }
}

impl ContourSpec {
    pub fn with_theta(theta: f64) -> Self {
        ContourSpec {
            theta,
            ..Default::default()
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes_per_circle = nodes;
        self
    }

    /// Rejects eigenvalues on or near the cut.
    pub fn check_admissible(&self, eigs: &[C64]) -> Result<()> {
        for &e in eigs {
            let d = distance_to_cut(e, self.theta);
            if !(d > self.cut_tolerance * e.norm().max(1.0)) {
                return Err(Error::PrincipalAngleViolation {
                    re: e.re,
                    im: e.im,
                    theta: self.theta,
                });
            }
        }
        Ok(())
    }

    /// Fits disjoint circles around `eigs`: one per eigenvalue cluster with
    /// radius `min(half gap to the nearest cluster, half distance to the cut)`
    /// clamped to `[min_radius, max_radius]`; overlapping circles are merged.
    pub fn fitted(&self, eigs: &[C64]) -> Result<ContourSpec> {
        self.check_admissible(eigs)?;
        // single-link clustering of numerically coincident eigenvalues
        let mut clusters: Vec<Vec<C64>> = Vec::new();
        for &e in eigs {
            let tol = 1e-6 * e.norm().max(1.0);
            let hit: Vec<usize> = clusters
                .iter()
                .enumerate()
                .filter(|(_, c)| c.iter().any(|&f| (f - e).norm() < tol))
                .map(|(i, _)| i)
                .collect();
            match hit.as_slice() {
                [] => clusters.push(vec![e]),
                [first, rest @ ..] => {
                    let first = *first;
                    for &r in rest.iter().rev() {
                        let moved = clusters.remove(r);
                        clusters[first].extend(moved);
                    }
                    clusters[first].push(e);
                }
            }
        }
        let centers: Vec<(C64, f64)> = clusters
            .iter()
            .map(|c| {
                let m = c.iter().sum::<C64>() / c.len() as f64;
                let spread = c.iter().map(|&e| (e - m).norm()).fold(0.0, f64::max);
                (m, spread)
            })
            .collect();
        let mut circles: Vec<Circle> = Vec::with_capacity(centers.len());
        for (i, &(c, spread)) in centers.iter().enumerate() {
            let gap = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &(o, _))| (o - c).norm())
                .fold(f64::INFINITY, f64::min);
            let cut = distance_to_cut(c, self.theta);
            let r = (0.5 * gap)
                .min(0.5 * cut)
                .clamp(self.min_radius, self.max_radius)
                .max(2.0 * spread);
            circles.push(Circle {
                center: c,
                radius: r,
            });
        }
        // merge overlapping circles into their smallest enclosing circle
        loop {
            let mut merged = false;
            'outer: for i in 0..circles.len() {
                for j in (i + 1)..circles.len() {
                    let (a, b) = (circles[i], circles[j]);
                    let d = (b.center - a.center).norm();
                    if d < a.radius + b.radius {
                        let enclosing = if d + b.radius <= a.radius {
                            a
                        } else if d + a.radius <= b.radius {
                            b
                        } else {
                            let r = 0.5 * (d + a.radius + b.radius);
                            let dir = (b.center - a.center) / d;
                            Circle {
                                center: a.center + dir * (r - a.radius),
                                radius: r,
                            }
                        };
                        circles[i] = enclosing;
                        circles.remove(j);
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        let fitted = ContourSpec {
            circles,
            ..self.clone()
        };
        fitted.validate(eigs)?;
        Ok(fitted)
    }

    /// Checks that the circles avoid the cut and enclose every eigenvalue
    /// exactly once.
    pub fn validate(&self, eigs: &[C64]) -> Result<()> {
        for c in &self.circles {
            if distance_to_cut(c.center, self.theta) <= c.radius {
                return Err(Error::PrincipalAngleViolation {
                    re: c.center.re,
                    im: c.center.im,
                    theta: self.theta,
                });
            }
        }
        for &e in eigs {
            let inside = self
                .circles
                .iter()
                .filter(|c| (e - c.center).norm() < c.radius)
                .count();
            if inside != 1 {
                return Err(Error::PrincipalAngleViolation {
                    re: e.re,
                    im: e.im,
                    theta: self.theta,
                });
            }
        }
        Ok(())
    }

    /// Nodes `λ_k` and weights `w_k` with
    /// `(i/2π) ∮ f(λ) g(λ) dλ ≈ Σ_k w_k g(λ_k)`.
    pub fn quadrature(&self, f: impl Fn(C64) -> C64) -> Vec<(C64, C64)> {
        let m = self.nodes_per_circle;
        let mut out = Vec::with_capacity(m * self.circles.len());
        for c in &self.circles {
            for k in 0..m {
                let phase = C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
                let lambda = c.center + phase * c.radius;
                // dλ = i r e^{iφ} dφ, and (i/2π)·i = -1/2π
                let w = -(phase * c.radius) * f(lambda) / m as f64;
                out.push((lambda, w));
            }
        }
        out
    }
}

fn resolvent_integral(a: &Jet, spec: &ContourSpec, f: impl Fn(C64) -> C64) -> Result<Jet> {
    let dim = a.dim();
    let eigs = linalg::eigenvalues(a.value(), dim);
    let spec = if spec.circles.is_empty() {
        spec.fitted(&eigs)?
    } else {
        spec.check_admissible(&eigs)?;
        spec.validate(&eigs)?;
        spec.clone()
    };
    let mut out = Jet::zero(a.anchor(), a.order(), dim);
    let mut shift = vec![C64::new(0.0, 0.0); dim * dim];
    for (lambda, w) in spec.quadrature(f) {
        for i in 0..dim {
            shift[i * dim + i] = -lambda;
        }
        let r = a.add_constant(&shift).inverse()?;
        out.axpy(w, &r);
    }
    Ok(out)
}

/// Logarithm `log_θ a` of a matrix jet by contour quadrature.
pub fn jet_log_contour(a: &Jet, spec: &ContourSpec) -> Result<Jet> {
    let theta = spec.theta;
    resolvent_integral(a, spec, |l| log_theta(l, theta))
}

/// Complex power `a_θ^{-s}` of a matrix jet by contour quadrature.
pub fn jet_power_contour(a: &Jet, s: C64, spec: &ContourSpec) -> Result<Jet> {
    if s == C64::new(0.0, 0.0) {
        let eigs = linalg::eigenvalues(a.value(), a.dim());
        spec.check_admissible(&eigs)?;
        return Ok(Jet::identity(a.anchor(), a.order(), a.dim()));
    }
    let theta = spec.theta;
    resolvent_integral(a, spec, |l| pow_theta(l, s, theta))
}

/// Matrix logarithm through an eigendecomposition, used to cross-check the
/// quadrature. Returns `None` unless the matrix has eigenvalues separated by
/// more than `1e-6`.
pub fn eigen_log(a: &[C64], dim: usize, theta: f64) -> Option<Vec<C64>> {
    let eigs = linalg::eigenvalues(a, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            if (eigs[i] - eigs[j]).norm() <= 1e-6 {
                return None;
            }
        }
    }
    // eigenvectors by inverse iteration
    let mut vecs = vec![C64::new(0.0, 0.0); dim * dim];
    for (col, &e) in eigs.iter().enumerate() {
        let shift = e + C64::new(1e-10, 1e-10) * e.norm().max(1.0);
        let mut m = a.to_vec();
        for i in 0..dim {
            m[i * dim + i] -= shift;
        }
        let (minv, _) = linalg::inverse(&m, dim)?;
        let mut v: Vec<C64> = (0..dim)
            .map(|i| C64::new(1.0 + 0.1 * i as f64, 0.3 * i as f64))
            .collect();
        for _ in 0..4 {
            let mut w = vec![C64::new(0.0, 0.0); dim];
            for i in 0..dim {
                for j in 0..dim {
                    w[i] += minv[i * dim + j] * v[j];
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v = w.into_iter().map(|z| z / norm).collect();
        }
        for i in 0..dim {
            vecs[i * dim + col] = v[i];
        }
    }
    let (vinv, cond) = linalg::inverse(&vecs, dim)?;
    if cond > 1e10 {
        return None;
    }
    let mut d = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        d[i * dim + i] = log_theta(eigs[i], theta);
    }
    Some(linalg::mul(&linalg::mul(&vecs, &d, dim), &vinv, dim))
}
