use std::sync::Arc;

use super::*;
use crate::oplib::{
    self, dbar_symbols_t2, laplace_symbol, negative_order_symbol, LaplaceSpec, RandomOptions,
};

const TAU: f64 = 2.0 * PI;

fn laplace(n: usize, t: f64) -> ClassicalSymbol {
    laplace_symbol(&LaplaceSpec::flat(n).unwrap().with_shift(t)).unwrap()
}

fn flat(n: usize) -> TorusChart {
    TorusChart::flat(n).unwrap()
}

fn numerics(n: usize) -> Numerics {
    Numerics::for_dimension(n)
}

fn close(a: C64, b: f64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.abs().max(1.0)
}

#[test]
fn residue_of_inverse_shifted_laplacian() {
    let q = laplace(2, 1.0).parametrix();
    let r = residue_trace(&q, &flat(2), &numerics(2)).unwrap();
    assert!(close(r.value, TAU, 1e-10), "{}", r.value);
    assert!(r.quad_error < 1e-10);
    assert_eq!(r.density.len(), 1);
}

#[test]
fn residue_vanishes_below_minus_n_and_for_the_identity() {
    let chart = Arc::new(flat(2));
    let opts = RandomOptions::for_chart(2);
    let q = negative_order_symbol(&chart, -3, 1, opts).unwrap();
    assert_eq!(residue_trace(&q, &chart, &numerics(2)).unwrap().value, C64::new(0.0, 0.0));
    let id = ClassicalSymbol::identity(2, 1);
    assert_eq!(residue_trace(&id, &chart, &numerics(2)).unwrap().value, C64::new(0.0, 0.0));
}

#[test]
fn report_value_is_the_weighted_density_sum() {
    let chart = Arc::new(flat(2).with_x_grid(6));
    let opts = RandomOptions::for_chart(2);
    let q = negative_order_symbol(&chart, -1, 5, opts).unwrap();
    let r = residue_trace(&q, &chart, &numerics(2)).unwrap();
    assert_eq!(r.density.len(), 36);
    let sum: C64 = r
        .density
        .iter()
        .zip(&r.density_weights)
        .map(|(d, w)| d.value * *w)
        .sum();
    assert!((sum - r.value).norm() < 1e-13);
}

#[test]
fn log_det_res_of_flat_laplacians() {
    let r = log_det_res(&laplace(2, 0.0), &flat(2), &numerics(2)).unwrap();
    assert!(r.value.norm() < 1e-10);
    assert!((r.exp_value.unwrap() - 1.0).norm() < 1e-10);
    let r = log_det_res(&laplace(2, 1.0), &flat(2), &numerics(2)).unwrap();
    assert!(close(r.value, TAU, 1e-9), "{}", r.value);
}

#[test]
fn log_det_res_is_trivial_on_identity_plus_smoothing_order() {
    let chart = Arc::new(flat(2));
    let opts = RandomOptions {
        x_dependent: false,
        ..RandomOptions::for_chart(2)
    };
    let q = negative_order_symbol(&chart, -3, 2, opts).unwrap();
    let a = ClassicalSymbol::add_merge(&ClassicalSymbol::identity(2, 1), &q).unwrap();
    let r = log_det_res(&a, &chart, &numerics(2)).unwrap();
    assert!(r.value.norm() < 1e-10, "{}", r.value);
}

#[test]
fn log_det_zero_examples() {
    let r = log_det_zero(&laplace(2, 0.0), &flat(2), &numerics(2)).unwrap();
    assert!(r.value.norm() < 1e-12);
    let chart = Arc::new(flat(2));
    let c = oplib::symbol_from_exprs(&chart, 1, 0.0, &["3"], true).unwrap();
    let r = log_det_zero(&c, &chart, &numerics(2)).unwrap();
    assert!(close(r.value, 3f64.ln(), 1e-12));
    let d = oplib::symbol_from_exprs(&chart, 2, 0.0, &["mat[[1,0],[0,4]]"], true).unwrap();
    let r = log_det_zero(&d, &chart, &numerics(2)).unwrap();
    assert!(close(r.value, 4f64.ln(), 1e-12), "{}", r.value);
}

#[test]
fn zeta_at_zero_examples() {
    let r = zeta_at_zero(&laplace(2, 1.0), &flat(2), &numerics(2), 0).unwrap();
    assert!(close(r.value, -PI, 1e-9));
    let r = zeta_at_zero(&laplace(2, 0.0), &flat(2), &numerics(2), 1).unwrap();
    assert!(close(r.value, -1.0, 1e-9));
    assert_eq!(r.h0, Some(1));
    let id = ClassicalSymbol::identity(2, 1);
    assert_eq!(
        zeta_at_zero(&id, &flat(2), &numerics(2), 0).unwrap_err().kind(),
        "ZeroOrder"
    );
}

#[test]
fn identity_plus_negative_order() {
    let chart = flat(2);
    let q = laplace(2, 1.0).parametrix();
    let r = log_det_res_one_plus(&q, &chart, &numerics(2)).unwrap();
    assert!(close(r.value, TAU, 1e-9));
    assert!(close(r.exp_value.unwrap(), TAU.exp(), 1e-8));

    let direct = log_det_res(
        &ClassicalSymbol::add_merge(&ClassicalSymbol::identity(2, 1), &q).unwrap(),
        &chart,
        &numerics(2),
    )
    .unwrap();
    assert!((direct.value - r.value).norm() < 1e-8);

    let small = negative_order_symbol(&Arc::new(flat(2)), -3, 9, RandomOptions::for_chart(2)).unwrap();
    let r = log_det_res_one_plus(&small, &chart, &numerics(2)).unwrap();
    assert_eq!(r.value, C64::new(0.0, 0.0));

    let err = log_det_res_one_plus(&laplace(2, 1.0), &chart, &numerics(2)).unwrap_err();
    assert_eq!(err.kind(), "InvalidOrder");
}

#[test]
fn index_of_self_adjoint_and_dbar() {
    let r = index_from_res(&laplace(2, 1.0), &flat(2), &numerics(2)).unwrap();
    assert!(r.raw.abs() < 1e-10);
    let (d, _) = dbar_symbols_t2().unwrap();
    let r = index_from_res(&d, &flat(2), &numerics(2)).unwrap();
    assert!(r.raw.abs() < 1e-9);
    assert_eq!(r.nearest, 0);
}

#[test]
fn index_of_winding_symbols() {
    let chart = flat(1);
    for w in [-2, 0, 1] {
        let a = oplib::winding_symbol_s1(w).unwrap();
        let r = index_from_res(&a, &chart, &numerics(1)).unwrap();
        assert!((r.raw + w as f64).abs() < 1e-3, "w = {w}: {}", r.raw);
        assert_eq!(r.nearest, -w as i64);
    }
}

#[test]
fn zeta_polynomial_of_shifted_laplacian() {
    let chart = flat(2);
    let id = ClassicalSymbol::identity(2, 1);
    let p = zeta_shift_polynomial(&laplace(2, 1.0), &[None, Some(id)], &chart, &numerics(2)).unwrap();
    assert_eq!(p.degree(), 1);
    assert!(close(p.coefficients[0], -PI, 1e-9));
    assert!(close(p.coefficients[1], -PI, 1e-9));
    assert!(close(p.eval(0.5), -1.5 * PI, 1e-9));
}

#[test]
fn zeta_polynomial_ignores_low_order_shifts() {
    let chart = Arc::new(flat(2));
    let opts = RandomOptions {
        x_dependent: false,
        ..RandomOptions::for_chart(2)
    };
    let b = negative_order_symbol(&chart, -1, 3, opts).unwrap();
    let a = laplace(2, 1.0);
    let p = zeta_shift_polynomial(&a, &[None, Some(b)], &chart, &numerics(2)).unwrap();
    assert!(close(p.coefficients[0], -PI, 1e-9));
    assert!(p.coefficients[1..].iter().all(|c| c.norm() < 1e-10));
}

#[test]
fn zeta_polynomial_rejects_bad_gaps() {
    let chart = flat(2);
    let a = laplace(2, 1.0);
    let err = zeta_shift_polynomial(&a, &[None, Some(laplace(2, 0.0))], &chart, &numerics(2))
        .unwrap_err();
    assert_eq!(err.kind(), "InvalidOrder");
}

#[test]
fn parametrix_power_residues() {
    let r = res_parametrix_power(&laplace(2, 0.0), 1, &flat(2), &numerics(2)).unwrap();
    assert!(close(r.value, TAU, 1e-10));
    let r = res_parametrix_power(&laplace(4, 0.0), 2, &flat(4), &numerics(4)).unwrap();
    assert!(close(r.value, 2.0 * PI * PI, 1e-8), "{}", r.value);
    let r = res_parametrix_power(&laplace(4, 0.0), 1, &flat(4), &numerics(4)).unwrap();
    assert!(r.value.norm() < 1e-10);
}
