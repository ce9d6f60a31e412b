use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::geometry::TorusChart;
use crate::jets::Anchor;
use crate::oplib::{self, RandomOptions};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn flat(n: usize) -> Arc<TorusChart> {
    Arc::new(TorusChart::flat(n).unwrap())
}

fn sym(n: usize, order: f64, srcs: &[&str]) -> ClassicalSymbol {
    oplib::symbol_from_exprs(&flat(n), 1, order, srcs, true).unwrap()
}

fn laplace(n: usize, t: f64) -> ClassicalSymbol {
    oplib::laplace_symbol(&oplib::LaplaceSpec::flat(n).unwrap().with_shift(t)).unwrap()
}

fn random_elliptic(n: usize, dim: usize, order: i32, seed: u64) -> ClassicalSymbol {
    let opts = RandomOptions {
        dim,
        ..RandomOptions::for_chart(n)
    };
    oplib::random_elliptic_symbol(&flat(n), order, seed, opts).unwrap()
}

fn scalar_slot(s: &SymbolJetStack, j: usize) -> C64 {
    s.slot(j).value()[0]
}

/// `a - λ` at the stack level (λ subtracted from slot 0).
fn minus_lambda(a: &SymbolJetStack, lambda: C64) -> SymbolJetStack {
    let mut out = a.clone();
    let dim = a.dim();
    let shift: Vec<C64> = crate::linalg::identity(dim)
        .into_iter()
        .map(|z| -z * lambda)
        .collect();
    out.slots_mut()[0] = a.slot(0).add_constant(&shift);
    out
}

#[test]
fn identity_is_neutral_for_composition() {
    let a = random_elliptic(2, 2, 1, 3);
    let id = ClassicalSymbol::identity(2, 2);
    let (x, xi) = ([0.3, 1.1], [0.6, 0.8]);
    let lhs = compose(&id, &a, &x, &xi).unwrap();
    let rhs = a.stack(&a.anchor_at(&x, &xi), 2).unwrap();
    assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    let lhs = compose(&a, &id, &x, &xi).unwrap();
    assert!(lhs.max_abs_diff(&rhs) < 1e-13);
}

#[test]
fn composition_order_matters_for_x_dependent_symbols() {
    let xi = sym(1, 1.0, &["xi(1)"]);
    let x_xi = sym(1, 1.0, &["x(1)*xi(1)"]);
    for (x, k) in [(0.7, 1.0), (2.0, -1.0)] {
        let ab = compose(&xi, &x_xi, &[x], &[k]).unwrap();
        let ba = compose(&x_xi, &xi, &[x], &[k]).unwrap();
        assert!((scalar_slot(&ab, 1) - c(0.0, -k)).norm() < 1e-14);
        assert!(scalar_slot(&ba, 1).norm() < 1e-14);
        assert!((scalar_slot(&ab, 0) - c(x * k * k, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn parametrix_inverts_laplace_plus_one() {
    let a = laplace(2, 1.0);
    let q = a.parametrix();
    let (x, xi) = ([0.2, 0.5], [0.6, -0.8]);
    let s = compose(&q, &a, &x, &xi).unwrap();
    let id = SymbolJetStack::identity(s.anchor(), 1, &graded(2));
    assert!(s.max_abs_diff(&id) < 1e-12);
    let p = parametrix(&a, &x, &xi).unwrap();
    assert!((scalar_slot(&p, 0) - 1.0).norm() < 1e-14);
    assert!(scalar_slot(&p, 1).norm() < 1e-14);
    assert!((scalar_slot(&p, 2) + 1.0).norm() < 1e-14);
}

#[test]
fn parametrix_of_flat_laplacian() {
    let p = parametrix(&laplace(2, 0.0), &[0.0, 0.0], &[0.8, 0.6]).unwrap();
    assert!((scalar_slot(&p, 0) - 1.0).norm() < 1e-14);
    assert!(scalar_slot(&p, 1).norm() < 1e-14);
    assert!(scalar_slot(&p, 2).norm() < 1e-14);
    // the degree -2 term is |ξ|^{-2}
    let p = parametrix(&laplace(2, 0.0), &[0.0, 0.0], &[1.6, 1.2]).unwrap();
    assert!((scalar_slot(&p, 0) - 0.25).norm() < 1e-14);
}

#[test]
fn parametrix_rejects_non_elliptic_symbol() {
    let a = sym(2, 1.0, &["xi(1)"]);
    let err = parametrix(&a, &[0.0, 0.0], &[0.0, 1.0]).unwrap_err();
    assert_eq!(err.kind(), "NotElliptic");
}

#[test]
fn add_merge_aligns_ladders() {
    let a = laplace(2, 0.0);
    let zero = ClassicalSymbol::zero(2, 1, 0.0);
    let s = add_merge(&a, &zero).unwrap();
    assert_eq!(s.order(), 2.0);
    let anchor = s.anchor_at(&[0.1, 0.2], &[0.6, 0.8]);
    assert!(s
        .stack(&anchor, 2)
        .unwrap()
        .max_abs_diff(&a.stack(&anchor, 2).unwrap())
        < 1e-15);

    let b = sym(2, 0.0, &["3+xi(1)*absxi_g^-1"]);
    let s = add_merge(&b, &a).unwrap();
    assert_eq!(s.order(), 2.0);
    let st = s.stack(&anchor, 2).unwrap();
    assert!((scalar_slot(&st, 0) - 1.0).norm() < 1e-14);
    assert!(scalar_slot(&st, 1).norm() < 1e-14);
    assert!((scalar_slot(&st, 2) - 3.6).norm() < 1e-14);

    let odd = ClassicalSymbol::zero(2, 1, 0.5);
    assert_eq!(add_merge(&a, &odd).unwrap_err().kind(), "OrderMismatch");
}

#[test]
fn adjoint_of_x_xi() {
    let a = sym(1, 1.0, &["x(1)*xi(1)"]);
    let s = a.adjoint();
    let anchor = s.anchor_at(&[0.9], &[1.0]);
    let st = s.stack(&anchor, 1).unwrap();
    assert!((scalar_slot(&st, 0) - 0.9).norm() < 1e-14);
    assert!((scalar_slot(&st, 1) - c(0.0, -1.0)).norm() < 1e-14);
    let back = s.adjoint().stack(&anchor, 1).unwrap();
    assert!(back.max_abs_diff(&a.stack(&anchor, 1).unwrap()) < 1e-14);
}

#[test]
fn adjoint_fixes_hermitian_x_independent_symbols() {
    let a = oplib::symbol_from_exprs(
        &flat(2),
        2,
        2.0,
        &["mat[[xi(1)^2, (1+2i)*xi(1)*xi(2)],[(1-2i)*xi(1)*xi(2), 3*xi(2)^2]]"],
        true,
    )
    .unwrap();
    let anchor = a.anchor_at(&[0.0, 0.0], &[0.6, 0.8]);
    let s = a.adjoint().stack(&anchor, 2).unwrap();
    assert!(s.max_abs_diff(&a.stack(&anchor, 2).unwrap()) < 1e-14);
}

#[test]
fn adjoint_twice_is_identity_on_random_symbols() {
    let a = random_elliptic(2, 2, 1, 11);
    let anchor = a.anchor_at(&[0.4, 2.5], &[-0.28, 0.96]);
    let aa = a.adjoint().adjoint().stack(&anchor, 2).unwrap();
    assert!(aa.max_abs_diff(&a.stack(&anchor, 2).unwrap()) < 1e-12);
}

#[test]
fn resolvent_of_flat_laplacian() {
    let r = resolvent_slots(&laplace(2, 0.0), c(-1.0, 0.0), &[0.0, 0.0], &[1.0, 0.0]).unwrap();
    assert!((scalar_slot(&r, 0) - 0.5).norm() < 1e-15);
    assert!(r.slot(1).max_abs() < 1e-15);
    assert!(r.slot(2).max_abs() < 1e-15);
}

#[test]
fn resolvent_with_potential() {
    let v = crate::expr::parse("1+0.3*cos(x(1))").unwrap();
    let a = oplib::laplace_symbol(&oplib::LaplaceSpec::flat(2).unwrap().with_potential(v)).unwrap();
    let lambda = c(-0.5, 0.3);
    let x = [0.4, 1.3];
    let xi = [0.6, 0.8];
    let r = resolvent_slots(&a, lambda, &x, &xi).unwrap();
    let vx = 1.0 + 0.3 * 0.4f64.cos();
    let r0 = (c(1.0, 0.0) - lambda).inv();
    assert!((scalar_slot(&r, 2) + vx * r0 * r0).norm() < 1e-14);
}

#[test]
fn resolvent_rejects_spectrum() {
    let err = resolvent_slots(&laplace(2, 0.0), c(1.0, 0.0), &[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
    assert_eq!(err.kind(), "ResolventSingular");
}

#[test]
fn resolvent_is_quasi_homogeneous() {
    let a = random_elliptic(2, 2, 2, 5);
    let (x, xi) = ([1.0, 0.3], [0.8, -0.6]);
    let lambda = c(-0.7, 0.4);
    let base = resolvent_slots(&a, lambda, &x, &xi).unwrap();
    for t in [1.5, 2.0] {
        let xt = [xi[0] * t, xi[1] * t];
        let r = resolvent_slots(&a, lambda * t.powi(2), &x, &xt).unwrap();
        for j in 0..=2 {
            let f = t.powf(-2.0 - j as f64);
            let scale = crate::linalg::max_abs(base.slot(j).value()).max(1e-3);
            for (u, v) in base.slot(j).value().iter().zip(r.slot(j).value()) {
                assert!((u * f - v).norm() < 1e-8 * scale * f, "slot {j}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn resolvent_is_a_two_sided_inverse(
        seed in 0u64..1000,
        x0 in 0.0..(2.0 * PI),
        x1 in 0.0..(2.0 * PI),
        phi in 0.0..(2.0 * PI),
        re in -3.0..-0.1f64,
        im in -2.0..2.0f64,
    ) {
        let a = random_elliptic(2, 2, 2, seed);
        let anchor = a.anchor_at(&[x0, x1], &[phi.cos(), phi.sin()]);
        let sa = a.stack(&anchor, 2).unwrap();
        let lambda = c(re, im);
        let r = resolvent_stack(&sa, lambda).unwrap();
        let shifted = minus_lambda(&sa, lambda);
        let id = SymbolJetStack::identity(&anchor, 2, &graded(2));
        let left = compose_stacks(&r, &shifted).unwrap();
        let right = compose_stacks(&shifted, &r).unwrap();
        prop_assert!(left.max_abs_diff(&id) < 1e-9);
        prop_assert!(right.max_abs_diff(&id) < 1e-9);
    }
}

#[test]
fn log_of_flat_laplacian_has_no_lower_terms() {
    let l = log_slots(&laplace(2, 0.0), PI, &[0.0, 0.0], &[0.6, 0.8]).unwrap();
    assert_eq!(l.alpha, 2.0);
    assert!(l.q.slot(1).max_abs() < 1e-12);
    assert!(l.q.slot(2).max_abs() < 1e-12);
    assert!(l.p0.max_abs() < 1e-12);
}

#[test]
fn log_of_laplace_plus_one() {
    let l = log_slots(&laplace(2, 1.0), PI, &[0.0, 0.0], &[0.6, 0.8]).unwrap();
    assert!((scalar_slot(&l.q, 2) - 1.0).norm() < 1e-12);
    assert!(l.q.slot(1).max_abs() < 1e-12);
}

#[test]
fn log_principal_split_is_degree_zero() {
    let a = random_elliptic(2, 2, 2, 21);
    let x = [0.5, 0.9];
    let l1 = log_slots(&a, PI, &x, &[0.6, 0.8]).unwrap();
    let l2 = log_slots(&a, PI, &x, &[1.2, 1.6]).unwrap();
    let d = crate::linalg::max_abs(
        &l1.p0
            .value()
            .iter()
            .zip(l2.p0.value())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    assert!(d < 1e-10, "{d}");
}

#[test]
fn power_at_zero_is_identity() {
    let a = random_elliptic(2, 2, 2, 4);
    let p = power_slots(&a, c(0.0, 0.0), PI, &[0.1, 0.2], &[0.6, 0.8], PowerMethod::Contour)
        .unwrap();
    let id = SymbolJetStack::identity(p.anchor(), 2, &graded(2));
    assert!(p.max_abs_diff(&id) == 0.0);
}

#[test]
fn power_of_laplace_plus_one() {
    let s = 0.37;
    for method in [PowerMethod::Contour, PowerMethod::LogSeries] {
        let p = power_slots(&laplace(2, 1.0), c(s, 0.0), PI, &[0.0, 0.0], &[0.6, 0.8], method)
            .unwrap();
        assert!((scalar_slot(&p, 0) - 1.0).norm() < 1e-12);
        assert!((scalar_slot(&p, 2) + s).norm() < 1e-12, "{method:?}");
    }
}

#[test]
fn contour_and_log_series_powers_agree() {
    for seed in 0..3 {
        let a = random_elliptic(2, 2, 1, 100 + seed);
        let (x, xi) = ([0.3, 4.0], [0.28, -0.96]);
        let s = c(0.6, 0.2);
        let p = power_slots(&a, s, PI, &x, &xi, PowerMethod::Contour).unwrap();
        let q = power_slots(&a, s, PI, &x, &xi, PowerMethod::LogSeries).unwrap();
        assert!(p.max_abs_diff(&q) < 1e-8, "{}", p.max_abs_diff(&q));
    }
}

#[test]
fn power_derivative_at_zero_is_minus_log() {
    let a = random_elliptic(2, 2, 2, 8);
    let (x, xi) = ([2.0, 0.1], [0.6, 0.8]);
    let h = 1e-4;
    let plus = power_slots(&a, c(h, 0.0), PI, &x, &xi, PowerMethod::Contour).unwrap();
    let minus = power_slots(&a, c(-h, 0.0), PI, &x, &xi, PowerMethod::Contour).unwrap();
    let log = log_slots(&a, PI, &x, &xi).unwrap();
    let diff = plus.try_sub(&minus).unwrap().scale(c(1.0 / (2.0 * h), 0.0));
    assert!(diff.max_abs_diff(&log.q.scale(c(-1.0, 0.0))) < 1e-6);
}

#[test]
fn log_series_reports_divergence() {
    // log|ξ|² ≈ 13.8 at |ξ| = 1000, so the terms of exp(-100 L) overflow
    let err = power_slots(&laplace(1, 0.0), c(100.0, 0.0), PI, &[0.0], &[1000.0], PowerMethod::LogSeries)
        .unwrap_err();
    assert_eq!(err.kind(), "SeriesNotConverged");
}

#[test]
fn log_rejects_eigenvalues_on_the_cut() {
    let a = laplace(2, 1.0);
    let err = log_slots(&a, 0.0, &[0.0, 0.0], &[0.6, 0.8]).unwrap_err();
    assert_eq!(err.kind(), "PrincipalAngleViolation");
}

#[test]
fn residue_slot_is_theta_independent() {
    let a = random_elliptic(2, 2, 2, 31);
    let x = [0.7, 0.2];
    let grid = crate::geometry::cosphere_quadrature(2, 16).unwrap();
    let integral = |theta: f64| -> C64 {
        grid.0
            .iter()
            .zip(&grid.1)
            .map(|(xi, w)| {
                let l = log_slots(&a, theta, &x, xi).unwrap();
                crate::linalg::trace(l.q.slot(2).value(), 2) * *w
            })
            .sum()
    };
    assert!((integral(PI) - integral(PI / 2.0)).norm() < 1e-9);
}

#[test]
fn finite_projection_evaluates_terms() {
    let a = random_elliptic(2, 2, 1, 9);
    let (x, xi) = ([0.3, 0.4], [0.6, 0.8]);
    let anchor = a.anchor_at(&x, &xi);
    let p = finite_project(&a, &anchor, 2).unwrap();
    assert!(p.is_graded());
    for j in 0..=2 {
        let v = a.term_value(j, &x, &xi).unwrap();
        let d = crate::linalg::max_abs(
            &v.iter().zip(p.slot(j).value()).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        assert!(d < 1e-14);
    }
}

#[test]
fn finite_projection_is_a_homomorphism() {
    let a = random_elliptic(2, 2, 1, 12);
    let b = random_elliptic(2, 2, 2, 13);
    let anchor = Anchor::new(vec![0.9, 2.1], vec![-0.6, 0.8], true);
    let ab = ClassicalSymbol::composed(&a, &b).unwrap();
    let direct = ab.eval_slots(&anchor, &[4, 3, 2]).unwrap().project_graded(2).unwrap();
    let pa = finite_project(&a, &anchor, 2).unwrap();
    let pb = finite_project(&b, &anchor, 2).unwrap();
    let product = compose_stacks(&pa, &pb).unwrap();
    assert!(direct.max_abs_diff(&product) < 1e-10);
}

#[test]
fn finite_projection_commutes_with_log() {
    let a = random_elliptic(2, 2, 2, 14);
    let anchor = Anchor::new(vec![0.2, 5.0], vec![0.8, 0.6], true);
    let spec = crate::jets::ContourSpec::default();
    let log = a.log_symbol(&spec);
    let direct = log.q_stack(&anchor, &[4, 3, 2]).unwrap().project_graded(2).unwrap();
    let pa = finite_project(&a, &anchor, 2).unwrap();
    let via = log_stack(&pa, &spec).unwrap();
    assert!(direct.max_abs_diff(&via) < 1e-9);
}

#[test]
fn truncation_underflow_for_short_ladders() {
    let chart = flat(2);
    let a = oplib::symbol_from_exprs(&chart, 1, 0.0, &["1"], false).unwrap();
    let err = compose(&a, &a, &[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
    assert_eq!(err.kind(), "TruncationUnderflow");
}

#[test]
fn homogeneity_of_registered_terms() {
    let a = random_elliptic(2, 2, 2, 1);
    let points: Vec<_> = (0..4)
        .map(|k| {
            let t = 0.7 * k as f64;
            Anchor::new(vec![t, 1.0 - t], vec![t.cos(), t.sin()], true)
        })
        .collect();
    assert!(a.homogeneity_error(&points).unwrap() < 1e-9);
    assert!(a.parametrix().homogeneity_error(&points).unwrap() < 1e-9);
}
