use std::f64::consts::PI;

use super::*;
use crate::functionals::{log_det_res, residue_trace, Numerics};
use crate::geometry::{build_metric, FourierTerm, MetricField};
use crate::jets::Anchor;
use crate::linalg;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn slots(a: &ClassicalSymbol, x: &[f64], xi: &[f64]) -> Vec<C64> {
    let anchor = a.anchor_at(x, xi);
    let s = a.stack(&anchor, a.n()).unwrap();
    (0..=a.n()).map(|j| s.slot(j).value()[0]).collect()
}

#[test]
fn flat_laplacian_ladder() {
    let a = laplace_symbol(&LaplaceSpec::flat(2).unwrap()).unwrap();
    assert!(a.x_independent());
    let s = slots(&a, &[0.3, 0.1], &[1.2, -0.5]);
    assert!((s[0] - 1.69).norm() < 1e-14);
    assert!(s[1].norm() < 1e-15 && s[2].norm() < 1e-15);

    let a = laplace_symbol(&LaplaceSpec::flat(2).unwrap().with_shift(1.0)).unwrap();
    let s = slots(&a, &[0.3, 0.1], &[1.2, -0.5]);
    assert!((s[2] - 1.0).norm() < 1e-15);
}

#[test]
fn conformal_laplacian_principal_part() {
    let omega = FourierTerm {
        wave: vec![1, 1],
        cos: 0.3,
        sin: -0.2,
    };
    let metric = MetricField {
        conformal: vec![omega.clone()],
        entries: vec![],
    };
    let chart = Arc::new(build_metric(2, 8, metric).unwrap());
    let spec = LaplaceSpec {
        chart,
        potential: None,
        rank: 1,
        shift: 0.0,
    };
    let a = laplace_symbol(&spec).unwrap();
    assert!(!a.x_independent());
    let x = [0.7, 2.2];
    let xi = [0.6, -1.1];
    let s = slots(&a, &x, &xi);
    let w = omega.eval(&x);
    let expected = (-2.0 * w).exp() * (xi[0] * xi[0] + xi[1] * xi[1]);
    assert!((s[0] - expected).norm() < 1e-13);
    // in two dimensions √g g^{ij} = δ^{ij}, so the first-order term vanishes
    assert!(s[1].norm() < 1e-13);
}

#[test]
fn rank_two_laplacian_is_scalar_times_identity() {
    let a = laplace_symbol(&LaplaceSpec::flat(2).unwrap().with_rank(2)).unwrap();
    let anchor = a.anchor_at(&[0.0, 0.0], &[1.0, 1.0]);
    let v = a.stack(&anchor, 2).unwrap().slot(0).value().to_vec();
    assert_eq!(v, vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
}

#[test]
fn shifting() {
    let a = laplace_symbol(&LaplaceSpec::flat(2).unwrap()).unwrap();
    let p = [0.1, 0.2];
    let k = [0.3, 0.4];
    assert_eq!(slots(&shift_symbol(&a, 0.0).unwrap(), &p, &k), slots(&a, &p, &k));
    let s = slots(&shift_symbol(&a, 1.0).unwrap(), &p, &k);
    assert!((s[0] - 0.25).norm() < 1e-15);
    assert!(s[1].norm() < 1e-15);
    assert!((s[2] - 1.0).norm() < 1e-15);
    let half = ClassicalSymbol::zero(2, 1, 0.5);
    assert_eq!(shift_symbol(&half, 1.0).unwrap_err().kind(), "OrderMismatch");
}

#[test]
fn dbar_pair() {
    let (d, dd) = dbar_symbols_t2().unwrap();
    let xi = [0.8, -1.3];
    let s = slots(&dd, &[0.0, 0.0], &xi);
    assert!((s[0] - 0.25 * (xi[0] * xi[0] + xi[1] * xi[1])).norm() < 1e-15);
    assert!(s[1].norm() < 1e-15 && s[2].norm() < 1e-15);
    let ds = slots(&d.adjoint(), &[0.0, 0.0], &xi);
    let dv = slots(&d, &[0.0, 0.0], &xi);
    assert!((ds[0] - dv[0].conj()).norm() < 1e-15);
    assert!((dv[0] - c(-0.5 * xi[1], 0.5 * xi[0])).norm() < 1e-15);
}

#[test]
fn winding_symbols() {
    let a = winding_symbol_s1(0).unwrap();
    assert!(a.x_independent());
    for k in [2.0, -0.5] {
        assert!((slots(&a, &[1.0], &[k])[0] - k.abs()).norm() < 1e-15);
    }
    let a = winding_symbol_s1(2).unwrap();
    let x = 0.4;
    assert!((slots(&a, &[x], &[3.0])[0] - c(0.0, 2.0 * x).exp() * 3.0).norm() < 1e-14);
    assert!((slots(&a, &[x], &[-3.0])[0] - 3.0).norm() < 1e-14);
}

#[test]
fn random_fixtures_are_deterministic() {
    let chart = Arc::new(TorusChart::flat(2).unwrap());
    let opts = RandomOptions {
        dim: 2,
        ..RandomOptions::for_chart(2)
    };
    let a = negative_order_symbol(&chart, -1, 7, opts).unwrap();
    let b = negative_order_symbol(&chart, -1, 7, opts).unwrap();
    let other = negative_order_symbol(&chart, -1, 8, opts).unwrap();
    let src = |s: &ClassicalSymbol| -> Vec<String> {
        s.terms()
            .unwrap()
            .iter()
            .map(|t| t.source.as_ref().unwrap().to_string())
            .collect()
    };
    assert_eq!(src(&a), src(&b));
    assert_ne!(src(&a), src(&other));
    let anchor = a.anchor_at(&[0.5, 0.5], &[0.6, 0.8]);
    let (sa, sb) = (a.stack(&anchor, 2).unwrap(), b.stack(&anchor, 2).unwrap());
    assert_eq!(sa.max_abs_diff(&sb), 0.0);
    assert_eq!(
        negative_order_symbol(&chart, 0, 1, opts).unwrap_err().kind(),
        "InvalidOrder"
    );
}

#[test]
fn random_fixtures_are_homogeneous() {
    let chart = Arc::new(TorusChart::flat(3).unwrap());
    let opts = RandomOptions {
        dim: 2,
        ..RandomOptions::for_chart(3)
    };
    let points: Vec<_> = (0..5)
        .map(|k| {
            let t = 0.9 * k as f64 + 0.1;
            Anchor::new(vec![t, 2.0 * t, 1.0], vec![t.cos(), t.sin(), 0.3], true)
        })
        .collect();
    for seed in 0..3 {
        let a = negative_order_symbol(&chart, -2, seed, opts).unwrap();
        assert!(a.homogeneity_error(&points).unwrap() < 1e-10);
        let e = random_elliptic_symbol(&chart, 2, seed, opts).unwrap();
        assert!(e.homogeneity_error(&points).unwrap() < 1e-10);
    }
}

#[test]
fn random_elliptic_principal_part_is_positive() {
    let chart = Arc::new(TorusChart::flat(2).unwrap());
    let opts = RandomOptions {
        dim: 3,
        ..RandomOptions::for_chart(2)
    };
    for seed in 0..5 {
        let a = random_elliptic_symbol(&chart, 1, seed, opts).unwrap();
        for k in 0..8 {
            let t = k as f64 * 0.8;
            let x = [t, 1.0 - t];
            let v = a.term_value(0, &x, &[t.cos(), t.sin()]).unwrap();
            for e in linalg::eigenvalues(&v, 3) {
                assert!(e.re > 0.1 && e.im.abs() < 1e-9, "seed {seed}: {e}");
            }
        }
    }
}

/// Residue by a separate rule: trapezoid in `x` and in the angle on the
/// unit circle, evaluating the generated expression pointwise.
fn direct_residue(a: &ClassicalSymbol, chart: &TorusChart) -> C64 {
    let term = &a.terms().unwrap()[(a.order() + 2.0) as usize];
    let e = term.source.as_ref().unwrap();
    let ctx = expr::EvalContext {
        chart,
        dim: a.dim(),
    };
    let (mx, mt) = (10, 40);
    let h = 2.0 * PI / mx as f64;
    let ht = 2.0 * PI / mt as f64;
    let mut total = c(0.0, 0.0);
    for i in 0..mx {
        for j in 0..mx {
            let x = [i as f64 * h, j as f64 * h];
            for k in 0..mt {
                let t = k as f64 * ht;
                let m = expr::eval_point(e, ctx, &x, &[t.cos(), t.sin()])
                    .unwrap()
                    .into_matrix(a.dim());
                total += m.trace() * h * h * ht;
            }
        }
    }
    total / (2.0 * PI).powi(2)
}

#[test]
fn residue_matches_direct_quadrature() {
    let chart = Arc::new(TorusChart::flat(2).unwrap());
    let opts = RandomOptions {
        dim: 2,
        ..RandomOptions::for_chart(2)
    };
    let numerics = Numerics::for_dimension(2).without_error_estimate();
    for (k, seed) in [(-1, 3), (-2, 4)] {
        let a = negative_order_symbol(&chart, k, seed, opts).unwrap();
        let r = residue_trace(&a, &chart, &numerics).unwrap();
        let d = direct_residue(&a, &chart);
        assert!((r.value - d).norm() < 1e-10, "{} vs {}", r.value, d);
    }
}

#[test]
fn laplacian_with_real_potential_is_formally_self_adjoint() {
    let v = expr::parse("1+0.3*cos(x(1))+0.2*sin(x(1)+x(2))").unwrap();
    let a = laplace_symbol(&LaplaceSpec::flat(2).unwrap().with_potential(v)).unwrap();
    let b = a.adjoint();
    for k in 0..6 {
        let t = 0.7 * k as f64;
        let anchor = a.anchor_at(&[t, 2.0 - t], &[t.cos(), t.sin()]);
        let d = a
            .stack(&anchor, 2)
            .unwrap()
            .max_abs_diff(&b.stack(&anchor, 2).unwrap());
        assert!(d < 1e-9);
    }
}

#[test]
fn log_det_with_potential_is_the_mean_potential() {
    let v = expr::parse("1+0.3*cos(x(1))").unwrap();
    let chart = TorusChart::flat(2).unwrap();
    let a = laplace_symbol(&LaplaceSpec::flat(2).unwrap().with_potential(v)).unwrap();
    let r = log_det_res(&a, &chart, &Numerics::for_dimension(2)).unwrap();
    assert!((r.value - 2.0 * PI).norm() < 1e-6, "{}", r.value);
    assert_eq!(r.density.len(), chart.x_grid * chart.x_grid);
}
