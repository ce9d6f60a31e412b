//! Ready-made symbols: Laplace-type operators, `∂̄` on `T^2`, winding
//! symbols on the circle, and seeded random fixtures.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{self, eval_jet, EvalContext, Expr};
use crate::geometry::TorusChart;
use crate::jets::Jet;
use crate::linalg::C64;
use crate::symbols::{is_integer, ClassicalSymbol, HomogeneousTerm};

/// A homogeneous term given by an expression on `chart`.
pub fn expr_term(chart: &Arc<TorusChart>, dim: usize, degree: f64, e: Expr) -> Result<HomogeneousTerm> {
    if let Some(k) = e.max_index() {
        if k >= chart.n {
            return Err(Error::EvaluationDomain(format!(
                "index {} used on T^{}",
                k + 1,
                chart.n
            )));
        }
    }
    let x_independent = !e.depends_on_x(chart.is_flat());
    let e = Arc::new(e);
    let (c, src) = (chart.clone(), e.clone());
    Ok(HomogeneousTerm::new(
        degree,
        x_independent,
        Arc::new(move |anchor, order| eval_jet(&src, EvalContext { chart: &c, dim }, anchor, order)),
    )
    .with_source(e))
}

/// Symbol of order `order` whose term `j` is `sources[j]`.
pub fn symbol_from_exprs(
    chart: &Arc<TorusChart>,
    dim: usize,
    order: f64,
    sources: &[&str],
    exhaustive: bool,
) -> Result<ClassicalSymbol> {
    let terms = sources
        .iter()
        .enumerate()
        .map(|(j, s)| expr_term(chart, dim, order - j as f64, expr::parse(s)?))
        .collect::<Result<Vec<_>>>()?;
    ClassicalSymbol::from_terms(chart.n, dim, order, terms, exhaustive)
}

/// Data of `Δ_g + ε + t` acting on `C^N`-valued functions.
#[derive(Debug, Clone)]
pub struct LaplaceSpec {
    pub chart: Arc<TorusChart>,
    /// x-dependent endomorphism `ε(x)` (scalar or `N x N`); `None` is zero.
    pub potential: Option<Expr>,
    pub rank: usize,
    pub shift: f64,
}

impl LaplaceSpec {
    pub fn flat(n: usize) -> Result<Self> {
        Ok(LaplaceSpec {
            chart: Arc::new(TorusChart::flat(n)?),
            potential: None,
            rank: 1,
            shift: 0.0,
        })
    }

    pub fn with_shift(mut self, t: f64) -> Self {
        self.shift = t;
        self
    }

    pub fn with_potential(mut self, e: Expr) -> Self {
        self.potential = Some(e);
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }
}

/// `Δ_g = -(1/√g) ∂_i (√g g^{ij} ∂_j) + ε + t` with ladder
/// `(g^{ij}ξ_iξ_j I, -i (1/√g) ∂_i(√g g^{ij}) ξ_j I, ε + t)`.
pub fn laplace_symbol(spec: &LaplaceSpec) -> Result<ClassicalSymbol> {
    let chart = spec.chart.clone();
    let n = chart.n;
    let dim = spec.rank;
    if let Some(p) = &spec.potential {
        if p.depends_on_xi() {
            return Err(Error::InvalidOrder(
                0.0,
                "the potential must not depend on xi".into(),
            ));
        }
    }
    let flat = chart.is_flat();
    let c0 = chart.clone();
    let principal = HomogeneousTerm::new(
        2.0,
        flat,
        Arc::new(move |anchor, order| {
            let m = c0.metric_jets(anchor, order)?;
            let mut q = Jet::zero(anchor, order, 1);
            for i in 0..n {
                let xi_i = Jet::coordinate_xi(anchor, order, i);
                for j in 0..n {
                    let xi_j = Jet::coordinate_xi(anchor, order, j);
                    q.axpy(C64::new(1.0, 0.0), &(&(&m.ginv.entry(i, j) * &xi_i) * &xi_j));
                }
            }
            Ok(q.times_identity(dim))
        }),
    );
    let first = if flat {
        HomogeneousTerm::zero(1.0, dim)
    } else {
        let c1 = chart.clone();
        HomogeneousTerm::new(
            1.0,
            false,
            Arc::new(move |anchor, order| {
                let m = c1.metric_jets(anchor, order + 1)?;
                let weighted = m.sqrt_det.scalar_mul(&m.ginv)?;
                let inv_sqrt = m.sqrt_det.truncate(order).inverse()?;
                let mut s = Jet::zero(anchor, order, 1);
                for j in 0..n {
                    let xi_j = Jet::coordinate_xi(anchor, order, j);
                    for i in 0..n {
                        let d = weighted.entry(i, j).dx(i);
                        s.axpy(C64::new(1.0, 0.0), &(&d * &xi_j));
                    }
                }
                Ok((&s * &inv_sqrt).scale(C64::new(0.0, -1.0)).times_identity(dim))
            }),
        )
    };
    let shift = spec.shift;
    let zeroth = match &spec.potential {
        None => HomogeneousTerm::constant(
            0.0,
            crate::linalg::identity(dim)
                .into_iter()
                .map(|z| z * shift)
                .collect(),
        ),
        Some(p) => {
            let base = expr_term(&chart, dim, 0.0, p.clone())?;
            let x_independent = base.x_independent;
            HomogeneousTerm::new(
                0.0,
                x_independent,
                Arc::new(move |anchor, order| {
                    let v = base.eval(anchor, order)?;
                    let id: Vec<C64> = crate::linalg::identity(dim)
                        .into_iter()
                        .map(|z| z * shift)
                        .collect();
                    Ok(v.add_constant(&id))
                }),
            )
        }
    };
    Ok(
        ClassicalSymbol::from_terms(n, dim, 2.0, vec![principal, first, zeroth], true)?
            .with_label(if shift == 0.0 {
                "laplace".to_string()
            } else {
                format!("laplace+{shift}")
            }),
    )
}

/// `a + t I` in the degree-0 slot; the order must be a non-negative integer.
pub fn shift_symbol(a: &ClassicalSymbol, t: f64) -> Result<ClassicalSymbol> {
    a.shifted(C64::new(t, 0.0))
}

/// `D = ∂̄ = ½(∂_1 + i∂_2)` on flat `T^2` with symbol `½(iξ_1 - ξ_2)`, and
/// `D*D = ¼|ξ|^2` formed by the symbol calculus.
pub fn dbar_symbols_t2() -> Result<(ClassicalSymbol, ClassicalSymbol)> {
    let chart = Arc::new(TorusChart::flat(2)?);
    let d = symbol_from_exprs(&chart, 1, 1.0, &["0.5*(i*xi(1)-xi(2))"], true)?.with_label("dbar");
    let dd = ClassicalSymbol::composed(&d.adjoint(), &d)?.with_label("dbar*dbar");
    Ok((d, dd))
}

/// `a(θ, ξ) = |ξ| (e^{iwθ} 1_{ξ>0} + 1_{ξ<0})` on `T^1`.
pub fn winding_symbol_s1(w: i32) -> Result<ClassicalSymbol> {
    let chart = Arc::new(TorusChart::flat(1)?);
    let src = if w == 0 {
        "absxi_g".to_string()
    } else {
        format!("absxi_g*(exp({w}*i*x(1))*pos(xi(1))+neg(xi(1)))")
    };
    Ok(symbol_from_exprs(&chart, 1, 1.0, &[&src], true)?.with_label(format!("winding({w})")))
}

fn coefficient(rng: &mut ChaCha8Rng, scale: f64) -> String {
    let (re, im): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    format!("({:.6}+{:.6}i)", re * scale, im * scale)
}

fn real_coefficient(rng: &mut ChaCha8Rng, scale: f64) -> String {
    format!("({:.6})", rng.gen_range(-1.0..1.0) * scale)
}

/// Random real trigonometric polynomial of degree one in each coordinate
/// (`"1"` when `x_dependent` is false).
fn trig_factor(rng: &mut ChaCha8Rng, n: usize, x_dependent: bool) -> String {
    if !x_dependent {
        return "1".into();
    }
    let k = rng.gen_range(0..n) + 1;
    let f = if rng.gen_bool(0.5) { "cos" } else { "sin" };
    format!("(1+{}*{f}(x({k})))", real_coefficient(rng, 0.5))
}

/// Random homogeneous polynomial of degree `m` in `ξ` divided by `|ξ|^m`:
/// a degree-0 function on the sphere.
fn sphere_factor(rng: &mut ChaCha8Rng, n: usize, m: usize) -> String {
    if m == 0 {
        return "1".into();
    }
    let mono: Vec<String> = (0..m)
        .map(|_| format!("xi({})", rng.gen_range(0..n) + 1))
        .collect();
    format!("{}*absxi_g^-{m}", mono.join("*"))
}

/// Options for the random fixtures.
#[derive(Debug, Clone, Copy)]
pub struct RandomOptions {
    pub dim: usize,
    pub x_dependent: bool,
    /// Number of slots (at least `n + 1`).
    pub slots: usize,
}

impl RandomOptions {
    pub fn for_chart(n: usize) -> Self {
        RandomOptions {
            dim: 1,
            x_dependent: true,
            slots: n + 1,
        }
    }
}

/// Random term of the given degree: a sum of `trig(x) · P(ξ)/|ξ|^m · |ξ|^deg · M`
/// with constant complex matrices `M`.
fn random_term_source(rng: &mut ChaCha8Rng, n: usize, degree: f64, opts: RandomOptions) -> String {
    let parts: Vec<String> = (0..2)
        .map(|_| {
            let m = rng.gen_range(0..3);
            let mat = if opts.dim == 1 {
                coefficient(rng, 1.0)
            } else {
                let rows: Vec<String> = (0..opts.dim)
                    .map(|_| {
                        let row: Vec<String> =
                            (0..opts.dim).map(|_| coefficient(rng, 1.0)).collect();
                        format!("[{}]", row.join(","))
                    })
                    .collect();
                format!("mat[{}]", rows.join(","))
            };
            format!(
                "{}*{}*{mat}",
                trig_factor(rng, n, opts.x_dependent),
                sphere_factor(rng, n, m)
            )
        })
        .collect();
    let body = parts.join("+");
    if degree == 0.0 {
        body
    } else {
        format!("({body})*absxi_g^{}", degree as i32)
    }
}

/// Random classical symbol of integer order `order`, determined by `seed`.
pub fn random_symbol(
    chart: &Arc<TorusChart>,
    order: i32,
    seed: u64,
    opts: RandomOptions,
) -> Result<ClassicalSymbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chart.n;
    let sources: Vec<String> = (0..opts.slots.max(n + 1))
        .map(|j| random_term_source(&mut rng, n, (order - j as i32) as f64, opts))
        .collect();
    let refs: Vec<&str> = sources.iter().map(|s| s.as_str()).collect();
    Ok(symbol_from_exprs(chart, opts.dim, order as f64, &refs, false)?
        .with_label(format!("random(order {order}, seed {seed})")))
}

/// Random classical symbol of negative integer order `k` (see [`random_symbol`]).
pub fn negative_order_symbol(
    chart: &Arc<TorusChart>,
    k: i32,
    seed: u64,
    opts: RandomOptions,
) -> Result<ClassicalSymbol> {
    if k >= 0 {
        return Err(Error::InvalidOrder(k as f64, "order must be negative".into()));
    }
    random_symbol(chart, k, seed, opts)
}

/// Random elliptic symbol of integer order `order` whose principal term
/// `|ξ|^α (c I + H(x, ξ/|ξ|))` is Hermitian positive definite; lower
/// terms are arbitrary.
pub fn random_elliptic_symbol(
    chart: &Arc<TorusChart>,
    order: i32,
    seed: u64,
    opts: RandomOptions,
) -> Result<ClassicalSymbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e111);
    let n = chart.n;
    let dim = opts.dim;
    // H = Σ_k f_k(x, ξ) S_k, |f_k| <= 1.5, ‖S_k‖_F <= dim * 0.3
    let mut parts = Vec::new();
    let mut bound = 0.0;
    for _ in 0..2 {
        let m = rng.gen_range(0..3);
        let trig = trig_factor(&mut rng, n, opts.x_dependent);
        let sphere = sphere_factor(&mut rng, n, m);
        let mut rows = Vec::new();
        let mut entries = vec![vec![String::new(); dim]; dim];
        for r in 0..dim {
            for c in r..dim {
                if r == c {
                    entries[r][c] = real_coefficient(&mut rng, 0.3);
                } else {
                    let (re, im): (f64, f64) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                    entries[r][c] = format!("({re:.6}+{im:.6}i)");
                    entries[c][r] = format!("({re:.6}-{im:.6}i)");
                }
            }
        }
        for row in &entries {
            rows.push(format!("[{}]", row.join(",")));
        }
        let mat = if dim == 1 {
            entries[0][0].clone()
        } else {
            format!("mat[{}]", rows.join(","))
        };
        bound += 1.5 * 0.45 * dim as f64;
        parts.push(format!("{trig}*{sphere}*{mat}"));
    }
    let c = bound + 0.5;
    let principal = format!("({c:.6}*I+{})*absxi_g^{order}", parts.join("+"));
    let mut sources = vec![principal];
    for j in 1..opts.slots.max(n + 1) {
        sources.push(random_term_source(
            &mut rng,
            n,
            (order - j as i32) as f64,
            opts,
        ));
    }
    let refs: Vec<&str> = sources.iter().map(|s| s.as_str()).collect();
    Ok(symbol_from_exprs(chart, dim, order as f64, &refs, false)?
        .with_label(format!("random elliptic(order {order}, seed {seed})")))
}

/// `true` when `v` is a negative integer.
pub fn is_negative_integer(v: f64) -> bool {
    is_integer(v) && v < -0.5
}

#[cfg(test)]
mod tests;
