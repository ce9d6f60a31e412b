//! Residue-type functionals assembled from per-point slot computations.
//!
//! Every functional is an integral `(2π)^{-n} ∫_T ∫_{|ξ|=1} f(x, ξ) dS dx`
//! of a pointwise quantity. The pointwise values are computed in parallel,
//! collected in node order and summed sequentially, so results do not
//! depend on the thread count.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{sphere_volume, QuadratureGrid, TorusChart};
use crate::jets::ContourSpec;
use crate::linalg::{self, C64};
use crate::symbols::{is_integer, ClassicalSymbol};

/// Quadrature and contour settings shared by all functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub sphere_resolution: usize,
    pub contour_nodes: usize,
    pub theta: f64,
    /// Recompute at doubled sphere resolution and contour nodes.
    pub estimate_error: bool,
}

impl Numerics {
    /// Defaults tuned per torus dimension.
    pub fn for_dimension(n: usize) -> Self {
        Numerics {
            sphere_resolution: match n {
                1 => 1,
                2 => 24,
                3 => 12,
                _ => 8,
            },
            contour_nodes: 64,
            theta: PI,
            estimate_error: true,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn without_error_estimate(mut self) -> Self {
        self.estimate_error = false;
        self
    }

    fn refined(self) -> Self {
        Numerics {
            sphere_resolution: 2 * self.sphere_resolution.max(1),
            contour_nodes: 2 * self.contour_nodes,
            estimate_error: false,
            ..self
        }
    }

    pub fn contour(&self) -> ContourSpec {
        ContourSpec::with_theta(self.theta).with_nodes(self.contour_nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample {
    pub x: Vec<f64>,
    pub value: C64,
}

/// Result of a functional: the value, its x-density, and the settings used.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub value: C64,
    /// `exp(value)` for log-determinants.
    pub exp_value: Option<C64>,
    /// Per x-node densities; `value = Σ weight · density`.
    pub density: Vec<DensitySample>,
    pub density_weights: Vec<f64>,
    pub quad_error: f64,
    pub params: BTreeMap<String, f64>,
    pub h0: Option<i64>,
}

impl Report {
    fn from_parts(
        value: C64,
        density: Vec<DensitySample>,
        weights: Vec<f64>,
        grid: &QuadratureGrid,
        numerics: &Numerics,
    ) -> Self {
        let mut params = BTreeMap::new();
        params.insert("n".into(), grid.n as f64);
        params.insert("sphere_resolution".into(), numerics.sphere_resolution as f64);
        params.insert("sphere_nodes".into(), grid.sphere_nodes.len() as f64);
        params.insert("x_nodes".into(), grid.x_nodes.len() as f64);
        params.insert("contour_nodes".into(), numerics.contour_nodes as f64);
        params.insert("theta".into(), numerics.theta);
        Report {
            value,
            exp_value: None,
            density,
            density_weights: weights,
            quad_error: 0.0,
            params,
            h0: None,
        }
    }

    fn zero(grid: &QuadratureGrid, numerics: &Numerics) -> Self {
        let density = grid
            .x_nodes
            .iter()
            .map(|x| DensitySample {
                x: x.clone(),
                value: C64::new(0.0, 0.0),
            })
            .collect();
        Self::from_parts(
            C64::new(0.0, 0.0),
            density,
            grid.x_weights.clone(),
            grid,
            numerics,
        )
    }

    /// `c · self + shift` applied to value and densities.
    fn affine(mut self, c: C64, shift: C64) -> Self {
        let vol: f64 = self.density_weights.iter().sum();
        self.value = self.value * c + shift;
        for d in &mut self.density {
            d.value = d.value * c + shift / vol;
        }
        self.quad_error *= c.norm();
        self
    }

    fn with_exp(mut self) -> Self {
        self.exp_value = Some(self.value.exp());
        self
    }
}

fn grid_for(chart: &TorusChart, numerics: &Numerics, x_independent: bool) -> Result<QuadratureGrid> {
    QuadratureGrid::new(
        chart,
        numerics.sphere_resolution,
        numerics.contour_nodes,
        x_independent,
    )
}

fn check_chart(chart: &TorusChart, symbols: &[&ClassicalSymbol]) -> Result<()> {
    for s in symbols {
        if s.n() != chart.n {
            return Err(Error::ShapeMismatch(format!(
                "symbol on T^{} integrated over T^{}",
                s.n(),
                chart.n
            )));
        }
    }
    Ok(())
}

/// `(2π)^{-n} Σ_x w_x Σ_ξ w_ξ f(x, ξ)` with per-x densities.
fn integrate<F>(grid: &QuadratureGrid, numerics: &Numerics, f: F) -> Result<Report>
where
    F: Fn(&[f64], &[f64]) -> Result<C64> + Sync,
{
    let nx = grid.x_nodes.len();
    let ns = grid.sphere_nodes.len();
    let values: Vec<C64> = (0..nx * ns)
        .into_par_iter()
        .map(|k| f(&grid.x_nodes[k / ns], &grid.sphere_nodes[k % ns]))
        .collect::<Result<Vec<_>>>()?;
    let norm = (2.0 * PI).powi(-(grid.n as i32));
    let mut density = Vec::with_capacity(nx);
    let mut value = C64::new(0.0, 0.0);
    for (i, x) in grid.x_nodes.iter().enumerate() {
        let mut d = C64::new(0.0, 0.0);
        for (j, w) in grid.sphere_weights.iter().enumerate() {
            d += values[i * ns + j] * *w;
        }
        d *= norm;
        value += d * grid.x_weights[i];
        density.push(DensitySample {
            x: x.clone(),
            value: d,
        });
    }
    Ok(Report::from_parts(
        value,
        density,
        grid.x_weights.clone(),
        grid,
        numerics,
    ))
}

/// Runs `compute` at the given settings and, if requested, at the refined
/// settings; the difference is the reported quadrature error.
fn with_error_estimate(
    numerics: &Numerics,
    compute: impl Fn(&Numerics) -> Result<Report>,
) -> Result<Report> {
    let mut r = compute(numerics)?;
    if numerics.estimate_error {
        let fine = compute(&numerics.refined())?;
        r.quad_error = (fine.value - r.value).norm();
    }
    Ok(r)
}

/// Index of the slot of homogeneity `-n`, if any.
fn residue_slot(order: f64, n: usize) -> Option<usize> {
    let j = order + n as f64;
    (is_integer(order) && j > -0.5).then(|| j.round() as usize)
}

fn residue_once(a: &ClassicalSymbol, chart: &TorusChart, numerics: &Numerics) -> Result<Report> {
    let grid = grid_for(chart, numerics, a.x_independent())?;
    let Some(j) = residue_slot(a.order(), a.n()) else {
        return Ok(Report::zero(&grid, numerics));
    };
    let orders = vec![0; j + 1];
    integrate(&grid, numerics, |x, xi| {
        let anchor = a.anchor_at(x, xi);
        let s = a.eval_slots(&anchor, &orders)?;
        Ok(linalg::trace(s.slot(j).value(), a.dim()))
    })
}

/// Residue trace `res(a) = (2π)^{-n} ∫∫ tr a_{-n}(x, ξ) dS(ξ) dx`; zero when
/// the order is not an integer or is below `-n`.
pub fn residue_trace(a: &ClassicalSymbol, chart: &TorusChart, numerics: &Numerics) -> Result<Report> {
    check_chart(chart, &[a])?;
    with_error_estimate(numerics, |nm| residue_once(a, chart, nm))
}

fn ensure_elliptic(a: &ClassicalSymbol, grid: &QuadratureGrid) -> Result<()> {
    if a.is_elliptic() {
        return Ok(());
    }
    for x in &grid.x_nodes {
        for xi in &grid.sphere_nodes {
            a.ensure_invertible_principal(x, xi)?;
        }
    }
    Ok(())
}

fn log_det_res_once(a: &ClassicalSymbol, chart: &TorusChart, numerics: &Numerics) -> Result<Report> {
    let grid = grid_for(chart, numerics, a.x_independent())?;
    ensure_elliptic(a, &grid)?;
    let n = a.n();
    let log = a.log_symbol(&numerics.contour());
    let orders = vec![0; n + 1];
    integrate(&grid, numerics, |x, xi| {
        let anchor = a.anchor_at(x, xi);
        let q = log.q_stack(&anchor, &orders)?;
        Ok(linalg::trace(q.slot(n).value(), a.dim()))
    })
}

/// `log det_res(a) = res(log_θ a)`.
pub fn log_det_res(a: &ClassicalSymbol, chart: &TorusChart, numerics: &Numerics) -> Result<Report> {
    check_chart(chart, &[a])?;
    Ok(with_error_estimate(numerics, |nm| log_det_res_once(a, chart, nm))?.with_exp())
}

/// `log det_0(a) = vol(S*T)^{-1} ∫_{S*T} log det a_0 dσ` with the Euclidean
/// cosphere measure.
pub fn log_det_zero(a: &ClassicalSymbol, chart: &TorusChart, numerics: &Numerics) -> Result<Report> {
    check_chart(chart, &[a])?;
    let r = with_error_estimate(numerics, |nm| {
        let grid = grid_for(chart, nm, a.x_independent())?;
        ensure_elliptic(a, &grid)?;
        integrate(&grid, nm, |x, xi| a.log_det_principal(x, xi, nm.theta))
    })?;
    // integrate() carries (2π)^{-n}; the cosphere volume is (2π)^n vol(S^{n-1})
    let n = chart.n;
    let scale = (2.0 * PI).powi(n as i32) / ((2.0 * PI).powi(n as i32) * sphere_volume(n));
    Ok(r.affine(C64::new(scale, 0.0), C64::new(0.0, 0.0)).with_exp())
}

/// `ζ(a, 0) = -res(log a)/α - h_0`.
pub fn zeta_at_zero(
    a: &ClassicalSymbol,
    chart: &TorusChart,
    numerics: &Numerics,
    h0: i64,
) -> Result<Report> {
    if a.order() == 0.0 {
        return Err(Error::ZeroOrder);
    }
    let r = log_det_res(a, chart, numerics)?;
    let mut r = r.affine(C64::new(-1.0 / a.order(), 0.0), C64::new(-(h0 as f64), 0.0));
    r.exp_value = None;
    r.h0 = Some(h0);
    Ok(r)
}

/// `log det_res(I + Q) = Σ_{j=1}^{[n/|k|]} (-1)^{j+1}/j · res(Q^j)` for `Q`
/// of negative integer order `k`.
pub fn log_det_res_one_plus(
    q: &ClassicalSymbol,
    chart: &TorusChart,
    numerics: &Numerics,
) -> Result<Report> {
    check_chart(chart, &[q])?;
    let k = q.order();
    if !is_integer(k) || k > -0.5 {
        return Err(Error::InvalidOrder(
            k,
            "I + Q needs Q of negative integer order".into(),
        ));
    }
    let terms = chart.n / (k.round().abs() as usize);
    let mut total: Option<Report> = None;
    let mut power = q.clone();
    for j in 1..=terms {
        if j > 1 {
            power = ClassicalSymbol::composed(&power, q)?;
        }
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let r = residue_trace(&power, chart, numerics)?
            .affine(C64::new(sign / j as f64, 0.0), C64::new(0.0, 0.0));
        total = Some(match total {
            None => r,
            Some(acc) => add_reports(acc, &r),
        });
    }
    let total = match total {
        Some(t) => t,
        None => {
            let grid = grid_for(chart, numerics, q.x_independent())?;
            Report::zero(&grid, numerics)
        }
    };
    Ok(total.with_exp())
}

/// Sum of two reports on the same x-grid (densities added node-wise); on
/// different grids the densities are integrated and spread uniformly.
fn add_reports(mut a: Report, b: &Report) -> Report {
    a.value += b.value;
    a.quad_error += b.quad_error;
    if a.density.len() == b.density.len() {
        for (d, e) in a.density.iter_mut().zip(&b.density) {
            d.value += e.value;
        }
    } else if b.density.len() > a.density.len() {
        let extra = a.value - b.value;
        let vol: f64 = b.density_weights.iter().sum();
        a.density = b
            .density
            .iter()
            .map(|d| DensitySample {
                x: d.x.clone(),
                value: d.value + extra / vol,
            })
            .collect();
        a.density_weights = b.density_weights.clone();
    } else {
        let vol: f64 = a.density_weights.iter().sum();
        for d in &mut a.density {
            d.value += b.value / vol;
        }
    }
    a
}

/// Index computed from residue determinants.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub raw: f64,
    pub nearest: i64,
    pub log_det_dd_star: Report,
    pub log_det_d_star_d: Report,
}

/// `Index(D) = (1/2d)(res log(DD* + I) - res log(D*D + I))` for `D` of
/// positive order `d`.
pub fn index_from_res(
    d: &ClassicalSymbol,
    chart: &TorusChart,
    numerics: &Numerics,
) -> Result<IndexReport> {
    let ord = d.order();
    if !(ord > 0.0) || !is_integer(ord) {
        return Err(Error::InvalidOrder(
            ord,
            "the index formula needs a positive integer order".into(),
        ));
    }
    let ds = d.adjoint();
    let one = C64::new(1.0, 0.0);
    let dd_star = ClassicalSymbol::composed(d, &ds)?.shifted(one)?;
    let d_star_d = ClassicalSymbol::composed(&ds, d)?.shifted(one)?;
    let a = log_det_res(&dd_star, chart, numerics)?;
    let b = log_det_res(&d_star_d, chart, numerics)?;
    let raw = (a.value.re - b.value.re) / (2.0 * ord);
    Ok(IndexReport {
        raw,
        nearest: raw.round() as i64,
        log_det_dd_star: a,
        log_det_d_star_d: b,
    })
}

/// `P(t) = ζ(A + B[t], 0) + h_0(A + B[t])` as a polynomial in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaPolynomial {
    /// `coefficients[k]` multiplies `t^k`.
    pub coefficients: Vec<C64>,
    pub quad_error: f64,
}

impl ZetaPolynomial {
    pub fn eval(&self, t: f64) -> C64 {
        self.coefficients
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, c| acc * t + c)
    }

    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|c| c.norm() > 1e-12)
            .unwrap_or(0)
    }
}

/// `ζ(A + B[t], 0) + h_0 = ζ(A, 0) + h_0(A)
///   + (1/α) Σ_k Σ_{I_k} ((-1)^k / k) res(Q B_{i_1} ... Q B_{i_k}) t^{|I_k|}`
/// with `B[t] = Σ_i t^i B_i` (`shifts[i] = B_i`, `None` for a zero term),
/// `Q` a parametrix of `A`, and tuples over all indices including `0`.
pub fn zeta_shift_polynomial(
    a: &ClassicalSymbol,
    shifts: &[Option<ClassicalSymbol>],
    chart: &TorusChart,
    numerics: &Numerics,
) -> Result<ZetaPolynomial> {
    let alpha = a.order();
    if !(alpha > 0.0) {
        return Err(Error::InvalidOrder(alpha, "A must have positive order".into()));
    }
    let n = chart.n as f64;
    let mut gaps = Vec::new();
    for (i, b) in shifts.iter().enumerate() {
        if let Some(b) = b {
            let gap = alpha - b.order();
            if !is_integer(gap) || gap < 0.5 {
                return Err(Error::InvalidOrder(
                    b.order(),
                    format!("order of A minus order of B_{i} must be a positive integer"),
                ));
            }
            gaps.push((i, gap.round() as usize, b.clone()));
        }
    }
    let log = log_det_res(a, chart, numerics)?;
    let max_power = shifts.len().saturating_sub(1);
    let q = a.parametrix();
    let qb: Vec<(usize, usize, ClassicalSymbol)> = gaps
        .iter()
        .map(|(i, g, b)| Ok((*i, *g, ClassicalSymbol::composed(&q, b)?)))
        .collect::<Result<_>>()?;
    let kmax = qb
        .iter()
        .map(|(_, g, _)| *g)
        .min()
        .map_or(0, |g| (n as usize) / g);
    let mut coefficients = vec![C64::new(0.0, 0.0); max_power * kmax + 1];
    coefficients[0] = -log.value / alpha;
    let mut quad_error = log.quad_error / alpha;
    // depth-first over tuples whose total order gap stays <= n
    let mut stack: Vec<(Vec<usize>, usize, usize, ClassicalSymbol)> = qb
        .iter()
        .enumerate()
        .filter(|(_, (_, g, _))| *g as f64 <= n)
        .map(|(k, (i, g, s))| (vec![k], *i, *g, s.clone()))
        .collect();
    while let Some((tuple, power, gap, sym)) = stack.pop() {
        let k = tuple.len();
        let r = residue_trace(&sym, chart, numerics)?;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coefficients[power] += r.value * (sign / (k as f64 * alpha));
        quad_error += r.quad_error / (k as f64 * alpha);
        for (m, (i, g, s)) in qb.iter().enumerate() {
            if (gap + g) as f64 <= n {
                let mut t = tuple.clone();
                t.push(m);
                stack.push((t, power + i, gap + g, ClassicalSymbol::composed(&sym, s)?));
            }
        }
    }
    Ok(ZetaPolynomial {
        coefficients,
        quad_error,
    })
}

/// `res(Q^k)` with `Q` the parametrix of `a`.
pub fn res_parametrix_power(
    a: &ClassicalSymbol,
    k: usize,
    chart: &TorusChart,
    numerics: &Numerics,
) -> Result<Report> {
    if k == 0 {
        return Err(Error::InvalidOrder(0.0, "k must be positive".into()));
    }
    let grid = grid_for(chart, numerics, a.x_independent())?;
    ensure_elliptic(a, &grid)?;
    let q = a.parametrix();
    residue_trace(&ClassicalSymbol::power(&q, k)?, chart, numerics)
}

#[cfg(test)]
mod tests;
