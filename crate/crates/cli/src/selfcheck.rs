//! Invariant checks on built-in fixtures.

use std::f64::consts::PI;
use std::sync::Arc;

use resdet::functionals::{
    index_from_res, log_det_res, log_det_res_one_plus, residue_trace, zeta_at_zero,
    zeta_shift_polynomial, Numerics,
};
use resdet::geometry::TorusChart;
use resdet::jets::Anchor;
use resdet::oplib::{
    laplace_symbol, negative_order_symbol, random_elliptic_symbol, random_symbol,
    winding_symbol_s1, LaplaceSpec, RandomOptions,
};
use resdet::symbols::{compose_stacks, power_slots, ClassicalSymbol, PowerMethod};
use resdet::{Result, C64};

use crate::config::TaskConfig;
use crate::report::{Check, TaskReport};

type CheckFn = fn() -> Result<f64>;

fn laplace(n: usize, t: f64) -> Result<ClassicalSymbol> {
    laplace_symbol(&LaplaceSpec::flat(n)?.with_shift(t))
}

fn quick(n: usize) -> Numerics {
    Numerics::for_dimension(n).without_error_estimate()
}

fn small_chart(n: usize, grid: usize) -> Result<Arc<TorusChart>> {
    Ok(Arc::new(TorusChart::flat(n)?.with_x_grid(grid)))
}

fn residue_flat() -> Result<f64> {
    let r = residue_trace(&laplace(2, 1.0)?.parametrix(), &TorusChart::flat(2)?, &quick(2))?;
    Ok((r.value - 2.0 * PI).norm() / (2.0 * PI))
}

fn log_det_flat() -> Result<f64> {
    let r = log_det_res(&laplace(2, 1.0)?, &TorusChart::flat(2)?, &quick(2))?;
    Ok((r.value - 2.0 * PI).norm() / (2.0 * PI))
}

fn zeta_flat() -> Result<f64> {
    let r = zeta_at_zero(&laplace(2, 1.0)?, &TorusChart::flat(2)?, &quick(2), 0)?;
    Ok((r.value + PI).norm())
}

fn zeta_polynomial() -> Result<f64> {
    let shifts = [None, Some(ClassicalSymbol::identity(2, 1))];
    let p = zeta_shift_polynomial(&laplace(2, 1.0)?, &shifts, &TorusChart::flat(2)?, &quick(2))?;
    Ok([0.5, 1.0]
        .iter()
        .map(|&t| (p.eval(t) + PI * (1.0 + t)).norm())
        .fold(0.0, f64::max))
}

fn potential_density() -> Result<f64> {
    let v = resdet::expr::parse("1+0.3*cos(x(1))")?;
    let chart = TorusChart::flat(2)?.with_x_grid(8);
    let spec = LaplaceSpec {
        chart: Arc::new(chart.clone()),
        ..LaplaceSpec::flat(2)?.with_potential(v)
    };
    let r = log_det_res(&laplace_symbol(&spec)?, &chart, &quick(2))?;
    Ok(r
        .density
        .iter()
        .map(|d| {
            let want = (1.0 + 0.3 * d.x[0].cos()) / (2.0 * PI);
            (d.value - want).norm() / want
        })
        .fold((r.value - 2.0 * PI).norm() / (2.0 * PI), f64::max))
}

fn multiplicativity() -> Result<f64> {
    let chart = small_chart(1, 16)?;
    let nm = quick(1);
    let mut worst: f64 = 0.0;
    for k in 0..3u64 {
        let opts = RandomOptions {
            dim: 1 + k as usize % 2,
            ..RandomOptions::for_chart(1)
        };
        let a = random_elliptic_symbol(&chart, 1, 70 + k, opts)?;
        let b = random_elliptic_symbol(&chart, 2, 80 + k, opts)?;
        let ab = ClassicalSymbol::composed(&a, &b)?;
        let d = log_det_res(&ab, &chart, &nm)?.value
            - log_det_res(&a, &chart, &nm)?.value
            - log_det_res(&b, &chart, &nm)?.value;
        worst = worst.max(d.norm());
    }
    Ok(worst)
}

fn tracial() -> Result<f64> {
    let chart = small_chart(2, 6)?;
    let opts = RandomOptions {
        dim: 2,
        ..RandomOptions::for_chart(2)
    };
    let a = random_symbol(&chart, 1, 11, opts)?;
    let b = random_symbol(&chart, -3, 12, opts)?;
    let ab = ClassicalSymbol::composed(&a, &b)?;
    let ba = ClassicalSymbol::composed(&b, &a)?.scaled(C64::new(-1.0, 0.0));
    let r = residue_trace(&ClassicalSymbol::add_merge(&ab, &ba)?, &chart, &quick(2))?;
    Ok(r.value.norm())
}

fn cut_independence() -> Result<f64> {
    let chart = small_chart(2, 6)?;
    let a = random_elliptic_symbol(&chart, 2, 21, RandomOptions::for_chart(2))?;
    let x = log_det_res(&a, &chart, &quick(2))?.value;
    let y = log_det_res(&a, &chart, &quick(2).with_theta(PI / 2.0))?.value;
    Ok((x - y).norm())
}

fn one_plus_triviality() -> Result<f64> {
    let chart = small_chart(2, 6)?;
    let q = negative_order_symbol(&chart, -3, 31, RandomOptions::for_chart(2))?;
    Ok(log_det_res_one_plus(&q, &chart, &quick(2))?.value.norm())
}

fn one_plus_two_paths() -> Result<f64> {
    let q = laplace(2, 1.0)?.parametrix();
    let chart = TorusChart::flat(2)?;
    let series = log_det_res_one_plus(&q, &chart, &quick(2))?.value;
    let a = ClassicalSymbol::add_merge(&ClassicalSymbol::identity(2, 1), &q)?;
    Ok((series - log_det_res(&a, &chart, &quick(2))?.value).norm())
}

fn power_methods() -> Result<f64> {
    let chart = small_chart(2, 6)?;
    let mut worst: f64 = 0.0;
    for k in 0..3u64 {
        let opts = RandomOptions {
            dim: 1 + k as usize,
            ..RandomOptions::for_chart(2)
        };
        let a = random_elliptic_symbol(&chart, 1, 41 + k, opts)?;
        let (x, xi) = ([0.3 * k as f64, 1.0], [0.6, 0.8]);
        let s = C64::new(0.5, 0.3);
        let p = power_slots(&a, s, PI, &x, &xi, PowerMethod::Contour)?;
        let q = power_slots(&a, s, PI, &x, &xi, PowerMethod::LogSeries)?;
        worst = worst.max(p.max_abs_diff(&q));
    }
    Ok(worst)
}

fn projection_homomorphism() -> Result<f64> {
    let chart = small_chart(2, 6)?;
    let opts = RandomOptions {
        dim: 2,
        slots: 5,
        ..RandomOptions::for_chart(2)
    };
    let a = random_symbol(&chart, 1, 51, opts)?;
    let b = random_symbol(&chart, 0, 52, opts)?;
    let anchor = Anchor::new(vec![0.4, 1.9], vec![0.8, -0.6], true);
    let long = compose_stacks(&a.stack(&anchor, 4)?, &b.stack(&anchor, 4)?)?.project_graded(2)?;
    let short = compose_stacks(&a.stack(&anchor, 2)?, &b.stack(&anchor, 2)?)?;
    Ok(long.max_abs_diff(&short))
}

fn winding_index() -> Result<f64> {
    let chart = TorusChart::flat(1)?;
    let mut worst: f64 = 0.0;
    for w in [-1, 2] {
        let r = index_from_res(&winding_symbol_s1(w)?, &chart, &quick(1))?;
        worst = worst.max((r.raw + w as f64).abs());
    }
    Ok(worst)
}

fn self_adjoint_potential() -> Result<f64> {
    let v = resdet::expr::parse("1+0.3*cos(x(1))+0.2*sin(x(1)+x(2))")?;
    let a = laplace_symbol(&LaplaceSpec::flat(2)?.with_potential(v))?;
    let b = a.adjoint();
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let t = 0.9 * k as f64;
        let anchor = a.anchor_at(&[t, 1.0 - t], &[t.cos(), t.sin()]);
        worst = worst.max(a.stack(&anchor, 2)?.max_abs_diff(&b.stack(&anchor, 2)?));
    }
    Ok(worst)
}

/// `(name, check, default tolerance)`.
pub const CHECKS: &[(&str, CheckFn, f64)] = &[
    ("residue_flat_t2", residue_flat, 1e-8),
    ("log_det_flat_t2", log_det_flat, 1e-6),
    ("zeta_zero_flat_t2", zeta_flat, 1e-6),
    ("zeta_shift_polynomial", zeta_polynomial, 1e-6),
    ("potential_density", potential_density, 1e-5),
    ("multiplicativity_t1", multiplicativity, 1e-6),
    ("tracial", tracial, 1e-8),
    ("cut_independence", cut_independence, 1e-9),
    ("one_plus_triviality", one_plus_triviality, 1e-10),
    ("one_plus_two_paths", one_plus_two_paths, 1e-8),
    ("power_methods_agree", power_methods, 1e-8),
    ("projection_homomorphism", projection_homomorphism, 1e-9),
    ("winding_index", winding_index, 1e-3),
    ("self_adjoint_potential", self_adjoint_potential, 1e-9),
];

/// Runs every check; the report value is the number of failures.
pub fn run(cfg: &TaskConfig, report: &mut TaskReport) {
    let mut checks = Vec::new();
    for &(name, f, tol) in CHECKS {
        let tolerance = cfg.numerics.tolerances.get(name).copied().unwrap_or(tol);
        let check = match f() {
            Ok(error) => Check {
                name: name.to_string(),
                passed: error <= tolerance,
                error,
                tolerance,
                message: None,
            },
            Err(e) => Check {
                name: name.to_string(),
                passed: false,
                error: f64::NAN,
                tolerance,
                message: Some(format!("{}: {e}", e.kind())),
            },
        };
        checks.push(check);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let failed = checks.len() - passed;
    report.set_value(C64::new(failed as f64, 0.0));
    report.params.insert("passed".into(), passed as f64);
    report.params.insert("failed".into(), failed as f64);
    report.checks = Some(checks);
}
