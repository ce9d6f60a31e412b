//! Flat-chart tori `T^n = (R / 2πZ)^n`, metrics given by Fourier data, and
//! the quadrature rules used by the residue integrals.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jets::{Anchor, Jet};
use crate::linalg::C64;

/// One real Fourier mode `cos * cos(k·x) + sin * sin(k·x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTerm {
    pub wave: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

impl FourierTerm {
    pub fn constant(value: f64, n: usize) -> Self {
        FourierTerm {
            wave: vec![0; n],
            cos: value,
            sin: 0.0,
        }
    }

    fn phase(&self, x: &[f64]) -> f64 {
        self.wave.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let p = self.phase(x);
        self.cos * p.cos() + self.sin * p.sin()
    }

    fn jet(&self, anchor: &Arc<Anchor>, order: usize) -> Jet {
        let mut phase = Jet::scalar(anchor, order, C64::new(0.0, 0.0));
        for (i, &k) in self.wave.iter().enumerate() {
            if k != 0 {
                phase = &phase + &Jet::coordinate_x(anchor, order, i).scale(C64::new(k as f64, 0.0));
            }
        }
        let mut out = Jet::scalar(anchor, order, C64::new(0.0, 0.0));
        if self.cos != 0.0 {
            out = &out + &phase.cos().scale(C64::new(self.cos, 0.0));
        }
        if self.sin != 0.0 {
            out = &out + &phase.sin().scale(C64::new(self.sin, 0.0));
        }
        out
    }
}

/// Metric `g(x) = e^{2ω(x)} (I + P(x))` with `ω` and the symmetric entries of
/// `P` given as finite real Fourier series. Empty data is the flat metric.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricField {
    pub conformal: Vec<FourierTerm>,
    /// `(i, j, term)` with 0-based indices; off-diagonal terms are mirrored.
    pub entries: Vec<(usize, usize, FourierTerm)>,
}

impl MetricField {
    pub fn is_flat(&self) -> bool {
        self.conformal.iter().all(|t| t.cos == 0.0 && t.sin == 0.0)
            && self.entries.iter().all(|(_, _, t)| t.cos == 0.0 && t.sin == 0.0)
    }

    fn omega(&self, x: &[f64]) -> f64 {
        self.conformal.iter().map(|t| t.eval(x)).sum()
    }

    /// `g(x)` as a dense real matrix.
    pub fn eval(&self, n: usize, x: &[f64]) -> DMatrix<f64> {
        let mut g = DMatrix::identity(n, n);
        for (i, j, t) in &self.entries {
            let v = t.eval(x);
            g[(*i, *j)] += v;
            if i != j {
                g[(*j, *i)] += v;
            }
        }
        g * (2.0 * self.omega(x)).exp()
    }
}

/// Jets of the metric quantities at one anchor.
#[derive(Debug, Clone)]
pub struct MetricJets {
    /// `g_ij` as an `n x n` matrix jet.
    pub g: Jet,
    /// `g^{ij}` as an `n x n` matrix jet.
    pub ginv: Jet,
    /// `sqrt(det g)` as a scalar jet.
    pub sqrt_det: Jet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusChart {
    pub n: usize,
    /// Trapezoid points per axis.
    pub x_grid: usize,
    pub metric: MetricField,
}

pub const DEFAULT_X_GRID: usize = 16;

/// Builds a chart and checks positive definiteness on the `x_grid` nodes.
pub fn build_metric(n: usize, x_grid: usize, metric: MetricField) -> Result<TorusChart> {
    if !(1..=4).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    for (i, j, t) in &metric.entries {
        if *i >= n || *j >= n || t.wave.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "metric entry ({i}, {j}) with wave {:?} on T^{n}",
                t.wave
            )));
        }
    }
    if metric.conformal.iter().any(|t| t.wave.len() != n) {
        return Err(Error::ShapeMismatch("conformal wave length".into()));
    }
    let chart = TorusChart { n, x_grid, metric };
    if !chart.metric.is_flat() {
        let (nodes, _) = x_quadrature(n, x_grid);
        for x in nodes {
            let g = chart.metric.eval(n, &x);
            let min_eig = SymmetricEigen::new(g)
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if !(min_eig > 1e-8) {
                return Err(Error::NotPositiveDefinite { node: x, min_eig });
            }
        }
    }
    Ok(chart)
}

impl TorusChart {
    pub fn flat(n: usize) -> Result<Self> {
        build_metric(n, DEFAULT_X_GRID, MetricField::default())
    }

    pub fn is_flat(&self) -> bool {
        self.metric.is_flat()
    }

    pub fn with_x_grid(mut self, x_grid: usize) -> Self {
        self.x_grid = x_grid;
        self
    }

    /// Jets of `g`, `g^{-1}` and `sqrt(det g)` at `anchor`.
    pub fn metric_jets(&self, anchor: &Arc<Anchor>, order: usize) -> Result<MetricJets> {
        let n = self.n;
        if anchor.n() != n {
            return Err(Error::ShapeMismatch(format!(
                "anchor of dimension {} on T^{n}",
                anchor.n()
            )));
        }
        if self.is_flat() {
            let id = Jet::identity(anchor, order, n);
            return Ok(MetricJets {
                g: id.clone(),
                ginv: id,
                sqrt_det: Jet::scalar(anchor, order, C64::new(1.0, 0.0)),
            });
        }
        if !anchor.with_x {
            return Err(Error::ShapeMismatch(
                "curved metric evaluated on an x-independent anchor".into(),
            ));
        }
        let zero = Jet::scalar(anchor, order, C64::new(0.0, 0.0));
        let one = Jet::scalar(anchor, order, C64::new(1.0, 0.0));
        let mut entries: Vec<Jet> = (0..n * n)
            .map(|k| if k / n == k % n { one.clone() } else { zero.clone() })
            .collect();
        for (i, j, t) in &self.metric.entries {
            let tj = t.jet(anchor, order);
            entries[i * n + j] = &entries[i * n + j] + &tj;
            if i != j {
                entries[j * n + i] = &entries[j * n + i] + &tj;
            }
        }
        let omega = self
            .metric
            .conformal
            .iter()
            .fold(zero.clone(), |acc, t| &acc + &t.jet(anchor, order));
        let det = determinant(&entries, n);
        let m = Jet::from_entries(&entries, n)?;
        let e2w = omega.scale(C64::new(2.0, 0.0)).exp();
        let em2w = omega.scale(C64::new(-2.0, 0.0)).exp();
        let enw = omega.scale(C64::new(n as f64, 0.0)).exp();
        Ok(MetricJets {
            g: e2w.scalar_mul(&m)?,
            ginv: em2w.scalar_mul(&m.inverse()?)?,
            sqrt_det: &det.sqrt()? * &enw,
        })
    }
}

/// Leibniz determinant of an `n x n` array of scalar jets (`n <= 4`).
fn determinant(entries: &[Jet], n: usize) -> Jet {
    fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        let mut p: Vec<usize> = (0..n).collect();
        fn heap(k: usize, p: &mut Vec<usize>, sign: &mut f64, out: &mut Vec<(Vec<usize>, f64)>) {
            if k <= 1 {
                out.push((p.clone(), *sign));
                return;
            }
            for i in 0..k {
                heap(k - 1, p, sign, out);
                if i + 1 < k {
                    if k % 2 == 0 {
                        p.swap(i, k - 1);
                    } else {
                        p.swap(0, k - 1);
                    }
                    *sign = -*sign;
                }
            }
        }
        let mut sign = 1.0;
        heap(n, &mut p, &mut sign, &mut out);
        out
    }
    let anchor = entries[0].anchor().clone();
    let order = entries[0].order();
    let mut det = Jet::scalar(&anchor, order, C64::new(0.0, 0.0));
    for (perm, sign) in permutations(n) {
        let mut term = Jet::scalar(&anchor, order, C64::new(sign, 0.0));
        for (i, &j) in perm.iter().enumerate() {
            term = &term * &entries[i * n + j];
        }
        det = &det + &term;
    }
    det
}

/// Product trapezoid rule on `[0, 2π)^n`; weights sum to `(2π)^n`.
pub fn x_quadrature(n: usize, points_per_axis: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = points_per_axis.max(1);
    let h = 2.0 * PI / m as f64;
    let total = m.pow(n as u32);
    let mut nodes = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut x = vec![0.0; n];
        for v in x.iter_mut().rev() {
            *v = (rem % m) as f64 * h;
            rem /= m;
        }
        nodes.push(x);
    }
    let w = (2.0 * PI).powi(n as i32) / total as f64;
    (nodes, vec![w; total])
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Golub–Welsch).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    if m == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// `vol(S^{n-1})`.
pub fn sphere_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => {
            // 2 π^{n/2} / Γ(n/2) by recursion vol(S^{n-1}) = 2π/(n-2) vol(S^{n-3})
            2.0 * PI / (n as f64 - 2.0) * sphere_volume(n - 2)
        }
    }
}

/// Quadrature on the Euclidean unit sphere `S^{n-1}`, exact for polynomials
/// of degree at most `resolution`.
pub fn cosphere_quadrature(n: usize, resolution: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let p = resolution;
    match n {
        1 => Ok((vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0])),
        2 => {
            let m = p + 1;
            let w = 2.0 * PI / m as f64;
            let nodes = (0..m)
                .map(|k| {
                    let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            Ok((nodes, vec![w; m]))
        }
        3 => {
            let (z, wz) = gauss_legendre(p / 2 + 1);
            let m = p + 1;
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for (zi, wi) in z.iter().zip(&wz) {
                let r = (1.0 - zi * zi).sqrt();
                for k in 0..m {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    nodes.push(vec![r * phi.cos(), r * phi.sin(), *zi]);
                    weights.push(wi * 2.0 * PI / m as f64);
                }
            }
            Ok((nodes, weights))
        }
        4 => {
            // xi = (cos η cos φ1, cos η sin φ1, sin η cos φ2, sin η sin φ2),
            // dS = ½ du dφ1 dφ2 with u = sin² η ∈ [0, 1]
            let (t, wt) = gauss_legendre(p / 2 + 1);
            let m = p + 1;
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for (ti, wi) in t.iter().zip(&wt) {
                let u = 0.5 * (ti + 1.0);
                let wu = 0.5 * wi;
                let (s, c) = (u.sqrt(), (1.0 - u).sqrt());
                for k1 in 0..m {
                    let p1 = 2.0 * PI * (k1 as f64 + 0.5) / m as f64;
                    for k2 in 0..m {
                        let p2 = 2.0 * PI * (k2 as f64 + 0.25) / m as f64;
                        nodes.push(vec![c * p1.cos(), c * p1.sin(), s * p2.cos(), s * p2.sin()]);
                        weights.push(0.5 * wu * (2.0 * PI / m as f64).powi(2));
                    }
                }
            }
            Ok((nodes, weights))
        }
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// `∫ sqrt(det g(x)) dx` by the periodic trapezoid rule.
pub fn metric_volume(chart: &TorusChart) -> f64 {
    let n = chart.n;
    if chart.is_flat() {
        return (2.0 * PI).powi(n as i32);
    }
    let (nodes, weights) = x_quadrature(n, chart.x_grid);
    nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| w * chart.metric.eval(n, x).determinant().sqrt())
        .sum()
}

/// Nodes and weights for one residue-type integral `∫_T ∫_{|ξ|=1} ... dS dx`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub n: usize,
    pub x_nodes: Vec<Vec<f64>>,
    pub x_weights: Vec<f64>,
    pub sphere_nodes: Vec<Vec<f64>>,
    pub sphere_weights: Vec<f64>,
    pub sphere_resolution: usize,
    pub contour_nodes: usize,
}

impl QuadratureGrid {
    /// With `collapse_x` the x-integral is a single node of weight `(2π)^n`.
    pub fn new(
        chart: &TorusChart,
        sphere_resolution: usize,
        contour_nodes: usize,
        collapse_x: bool,
    ) -> Result<Self> {
        let n = chart.n;
        let (x_nodes, x_weights) = if collapse_x {
            (vec![vec![0.0; n]], vec![(2.0 * PI).powi(n as i32)])
        } else {
            x_quadrature(n, chart.x_grid)
        };
        let (sphere_nodes, sphere_weights) = cosphere_quadrature(n, sphere_resolution)?;
        Ok(QuadratureGrid {
            n,
            x_nodes,
            x_weights,
            sphere_nodes,
            sphere_weights,
            sphere_resolution,
            contour_nodes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conformal_t2() -> MetricField {
        MetricField {
            conformal: vec![FourierTerm {
                wave: vec![1, 0],
                cos: 0.1,
                sin: 0.0,
            }],
            entries: vec![],
        }
    }

    /// I_0(z) = Σ (z/2)^{2k} / (k!)^2
    fn bessel_i0(z: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            term *= (z / 2.0).powi(2) / (k * k) as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn flat_metric_from_empty_data() {
        let chart = build_metric(2, 8, MetricField::default()).unwrap();
        assert!(chart.is_flat());
        assert!((metric_volume(&chart) - 4.0 * PI * PI).abs() < 1e-12);
        let t4 = TorusChart::flat(4).unwrap();
        assert!((metric_volume(&t4) - (2.0 * PI).powi(4)).abs() < 1e-9);
    }

    #[test]
    fn conformal_metric_volume_matches_bessel_series() {
        let chart = build_metric(2, 16, conformal_t2()).unwrap();
        let v = metric_volume(&chart);
        let expected = 4.0 * PI * PI * bessel_i0(0.2);
        assert!((v - expected).abs() < 1e-12 * expected, "{v} vs {expected}");
        assert!((bessel_i0(0.2) - 1.0100250).abs() < 1e-7);
    }

    #[test]
    fn volume_is_grid_doubling_stable() {
        let metric = MetricField {
            conformal: vec![],
            entries: vec![
                (0, 0, FourierTerm { wave: vec![1, 1], cos: 0.2, sin: 0.1 }),
                (0, 1, FourierTerm { wave: vec![0, 1], cos: 0.1, sin: 0.0 }),
            ],
        };
        let a = build_metric(2, 16, metric.clone()).unwrap();
        let b = build_metric(2, 32, metric).unwrap();
        assert!((metric_volume(&a) - metric_volume(&b)).abs() < 1e-12);
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        // g_11 = 1 - 1 + cos x_1 = cos x_1
        let metric = MetricField {
            conformal: vec![],
            entries: vec![
                (0, 0, FourierTerm::constant(-1.0, 2)),
                (0, 0, FourierTerm { wave: vec![1, 0], cos: 1.0, sin: 0.0 }),
            ],
        };
        assert!(matches!(
            build_metric(2, 16, metric),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn sphere_rules_have_exact_volume() {
        let (_, w1) = cosphere_quadrature(1, 4).unwrap();
        assert_eq!(w1.iter().sum::<f64>(), 2.0);
        let (_, w2) = cosphere_quadrature(2, 8).unwrap();
        assert!((w2.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-14);
        let (_, w3) = cosphere_quadrature(3, 8).unwrap();
        assert!((w3.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        let (_, w4) = cosphere_quadrature(4, 8).unwrap();
        assert!((w4.iter().sum::<f64>() - 2.0 * PI * PI).abs() < 1e-12);
        assert!(cosphere_quadrature(5, 8).is_err());
    }

    #[test]
    fn sphere_rules_integrate_second_moments() {
        for n in 1..=4 {
            let (nodes, w) = cosphere_quadrature(n, 6).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = nodes.iter().zip(&w).map(|(x, w)| w * x[i] * x[j]).sum();
                    let exact = if i == j { sphere_volume(n) / n as f64 } else { 0.0 };
                    assert!((v - exact).abs() < 1e-10, "n={n} ({i},{j}): {v} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn sphere_rules_integrate_quartic_moment() {
        // ∫_{S^{n-1}} ξ_1^4 = 3 vol / (n (n + 2))
        for n in 2..=4 {
            let (nodes, w) = cosphere_quadrature(n, 4).unwrap();
            let v: f64 = nodes.iter().zip(&w).map(|(x, w)| w * x[0].powi(4)).sum();
            let exact = 3.0 * sphere_volume(n) / (n * (n + 2)) as f64;
            assert!((v - exact).abs() < 1e-12, "n={n}: {v} vs {exact}");
        }
    }

    #[test]
    fn metric_jets_match_pointwise_values() {
        let chart = build_metric(2, 16, conformal_t2()).unwrap();
        let anchor = Anchor::new(vec![0.4, 1.1], vec![1.0, 0.0], true);
        let mj = chart.metric_jets(&anchor, 2).unwrap();
        let g = chart.metric.eval(2, &anchor.x);
        let e2w = (0.2 * 0.4f64.cos()).exp();
        assert!((g[(0, 0)] - e2w).abs() < 1e-14);
        assert!((mj.g.value()[0].re - e2w).abs() < 1e-14);
        assert!((mj.ginv.value()[3].re - 1.0 / e2w).abs() < 1e-14);
        assert!((mj.sqrt_det.value()[0].re - e2w).abs() < 1e-14);
        // d/dx1 sqrt(det g) = e^{2ω} · 2 ω'(x1), ω' = -0.1 sin x1
        let d = mj.sqrt_det.dx(0).value()[0].re;
        assert!((d - e2w * 2.0 * (-0.1 * 0.4f64.sin())).abs() < 1e-13);
    }
}
