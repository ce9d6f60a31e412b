use std::sync::Arc;

use super::*;
use crate::geometry::{build_metric, FourierTerm, MetricField, TorusChart};
use crate::jets::{Anchor, Jet};
use crate::linalg::C64;
use crate::Error;

fn flat2() -> TorusChart {
    TorusChart::flat(2).unwrap()
}

fn curved2() -> TorusChart {
    let metric = MetricField {
        conformal: vec![FourierTerm {
            wave: vec![1, 0],
            cos: 0.2,
            sin: 0.1,
        }],
        entries: vec![
            (
                0,
                1,
                FourierTerm {
                    wave: vec![0, 1],
                    cos: 0.1,
                    sin: 0.0,
                },
            ),
            (
                1,
                1,
                FourierTerm {
                    wave: vec![1, 1],
                    cos: 0.0,
                    sin: 0.15,
                },
            ),
        ],
    };
    build_metric(2, 8, metric).unwrap()
}

fn jet_of(src: &str, chart: &TorusChart, dim: usize, x: &[f64], xi: &[f64], order: usize) -> Jet {
    let e = parse(src).unwrap();
    let anchor = Anchor::new(x.to_vec(), xi.to_vec(), true);
    eval_jet(&e, EvalContext { chart, dim }, &anchor, order).unwrap()
}

#[test]
fn parses_polynomial_in_xi() {
    let e = parse("xi(1)^2 + xi(2)^2").unwrap();
    let sq = |k| Expr::Pow(Box::new(Expr::Xi(k)), 2);
    assert_eq!(e, Expr::Add(Box::new(sq(0)), Box::new(sq(1))));
    assert!(e.depends_on_xi());
    assert!(!e.depends_on_x(true));
}

#[test]
fn parses_trig_times_xi() {
    let e = parse("cos(x(1))*xi(1)").unwrap();
    assert_eq!(
        e,
        Expr::Mul(
            Box::new(Expr::Call(Func::Cos, Box::new(Expr::X(0)))),
            Box::new(Expr::Xi(0))
        )
    );
}

#[test]
fn precedence_of_power_and_unary_minus() {
    let e = parse("-xi(1)^2").unwrap();
    assert_eq!(e, Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Xi(0)), 2))));
    let e = parse("1-2*3").unwrap();
    assert!(matches!(e, Expr::Sub(..)));
    let e = parse("absxi_g^-1").unwrap();
    assert_eq!(e, Expr::Pow(Box::new(Expr::AbsXiG), -1));
}

#[test]
fn trailing_operator_reports_column() {
    match parse("xi(1) +").unwrap_err() {
        Error::SyntaxError { line, column, .. } => assert_eq!((line, column), (1, 8)),
        e => panic!("unexpected {e:?}"),
    }
    match parse("xi(1)\n  * )").unwrap_err() {
        Error::SyntaxError { line, column, .. } => assert_eq!((line, column), (2, 5)),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn diagnostics_name_the_expected_token() {
    let msg = parse("xi(1").unwrap_err().to_string();
    assert!(msg.contains("expected"), "{msg}");
}

#[test]
fn unknown_identifiers_are_rejected() {
    let err = parse("2*zeta(1)").unwrap_err();
    assert_eq!(err.kind(), "UnknownIdentifier");
}

#[test]
fn smooth_functions_reject_xi_arguments() {
    assert_eq!(parse("cos(xi(1))").unwrap_err().kind(), "SyntaxError");
    assert_eq!(parse("pos(x(1))").unwrap_err().kind(), "SyntaxError");
    assert_eq!(parse("mat[[1,2]]").unwrap_err().kind(), "SyntaxError");
    assert_eq!(parse("xi(0)").unwrap_err().kind(), "SyntaxError");
    assert_eq!(parse("xi(1)^1.5").unwrap_err().kind(), "SyntaxError");
}

const CORPUS: &[&str] = &[
    "1",
    "2.5",
    "0.001",
    "3i",
    "i",
    "pi",
    "I",
    "x(1)",
    "xi(2)",
    "gup(1,2)",
    "sqrtdetg",
    "absxi_g",
    "-x(1)",
    "--xi(1)",
    "xi(1)^2 + xi(2)^2",
    "xi(1) - xi(2) - xi(1)",
    "xi(1) - (xi(2) - xi(1))",
    "xi(1) / xi(2) / 3",
    "xi(1) / (xi(2) / 3)",
    "xi(1) * (xi(2) + 1)",
    "(xi(1) + 1)^3",
    "(-xi(1))^2",
    "-xi(1)^2",
    "absxi_g^-2",
    "(absxi_g^2)^-1",
    "2*pi*x(1)",
    "cos(x(1))*xi(1)",
    "sin(x(1) + x(2))^2",
    "exp(2i*x(1))",
    "exp(-x(2)/2)",
    "pos(xi(1)) + neg(xi(1))",
    "absxi_g*(exp(3*i*x(1))*pos(xi(1))+neg(xi(1)))",
    "gup(1,1)*xi(1)^2 + 2*gup(1,2)*xi(1)*xi(2) + gup(2,2)*xi(2)^2",
    "sqrtdetg*absxi_g",
    "mat[[1, 0], [0, 1]]",
    "mat[[xi(1), i*xi(2)], [-i*xi(2), xi(1)]]",
    "mat[[cos(x(1)), 0], [0, sin(x(2))]] * absxi_g",
    "I*xi(1) + mat[[0, 1], [1, 0]]*xi(2)",
    "(1 + 2i)*xi(1)",
    "1 + 2i*xi(1)",
    "x(1) * -xi(1)",
    "x(1) - -x(2)",
    "0.5*(i*xi(1) - xi(2))",
    "3*(x(1)*(x(2)*xi(1)))",
    "((x(1)*x(2))*xi(1))*3",
    "xi(1)^2*xi(2)^-1",
    "1/(1 + cos(x(1))^2)",
    "cos(sin(exp(x(1))))",
    "pi^2 - x(1)^2",
    "-(xi(1) + xi(2))",
];

#[test]
fn printed_expressions_reparse_identically() {
    assert_eq!(CORPUS.len(), 50);
    for src in CORPUS {
        let e = parse(src).unwrap_or_else(|err| panic!("{src}: {err}"));
        let printed = e.to_string();
        let back = parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(back, e, "{src} printed as {printed}");
    }
}

#[test]
fn polynomial_jet_is_exact() {
    let j = jet_of("xi(1)^2+xi(2)^2", &flat2(), 1, &[0.0, 0.0], &[1.0, 0.0], 2);
    // variables: x1, x2, ξ1, ξ2
    let c = |e: [u8; 4]| j.coeff(&e).unwrap()[0];
    assert_eq!(c([0, 0, 0, 0]), C64::new(1.0, 0.0));
    assert_eq!(c([0, 0, 1, 0]), C64::new(2.0, 0.0));
    assert_eq!(c([0, 0, 0, 1]), C64::new(0.0, 0.0));
    assert_eq!(c([0, 0, 2, 0]), C64::new(1.0, 0.0));
    assert_eq!(c([0, 0, 0, 2]), C64::new(1.0, 0.0));
    assert_eq!(c([0, 0, 1, 1]), C64::new(0.0, 0.0));
    assert_eq!(c([1, 0, 1, 0]), C64::new(0.0, 0.0));
}

#[test]
fn cosine_jet() {
    let j = jet_of("cos(x(1))", &flat2(), 1, &[0.0, 0.0], &[1.0, 0.0], 2);
    assert!((j.coeff(&[0, 0, 0, 0]).unwrap()[0] - 1.0).norm() < 1e-15);
    assert!(j.coeff(&[1, 0, 0, 0]).unwrap()[0].norm() < 1e-15);
    assert!((j.coeff(&[2, 0, 0, 0]).unwrap()[0] + 0.5).norm() < 1e-15);
}

#[test]
fn division_by_vanishing_scalar() {
    let e = parse("1/xi(1)").unwrap();
    let chart = flat2();
    let anchor = Anchor::new(vec![0.0, 0.0], vec![0.0, 1.0], true);
    let err = eval_jet(&e, EvalContext { chart: &chart, dim: 1 }, &anchor, 2).unwrap_err();
    assert_eq!(err.kind(), "EvaluationDomain");
    let err = eval_point(&e, EvalContext { chart: &chart, dim: 1 }, &[0.0, 0.0], &[0.0, 1.0])
        .unwrap_err();
    assert_eq!(err.kind(), "EvaluationDomain");
}

#[test]
fn scalars_promote_in_matrix_sums() {
    let j = jet_of("mat[[xi(1), 1], [0, 2]] + 3", &flat2(), 2, &[0.0, 0.0], &[0.5, 0.0], 0);
    let v = j.value();
    assert_eq!(v, &[C64::new(3.5, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(5.0, 0.0)]);
}

/// Central differences of `eval_point` against jet coefficients of total
/// degree ≤ 2.
fn check_against_differences(src: &str, chart: &TorusChart, dim: usize, x: &[f64], xi: &[f64]) {
    let n = x.len();
    let nv = 2 * n;
    let e = parse(src).unwrap();
    let ctx = EvalContext { chart, dim };
    let anchor = Anchor::new(x.to_vec(), xi.to_vec(), true);
    let jet = eval_jet(&e, ctx, &anchor, 2).unwrap();
    let f = |d: &[f64]| -> Vec<C64> {
        let xs: Vec<f64> = (0..n).map(|i| x[i] + d[i]).collect();
        let ks: Vec<f64> = (0..n).map(|i| xi[i] + d[n + i]).collect();
        let m = eval_point(&e, ctx, &xs, &ks).unwrap().into_matrix(dim);
        // row-major to match the jet layout
        (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect()
    };
    let h = 1e-4;
    let shift = |pairs: &[(usize, f64)]| {
        let mut d = vec![0.0; nv];
        for &(v, s) in pairs {
            d[v] += s;
        }
        f(&d)
    };
    let check = |exps: Vec<u8>, fd: Vec<C64>| {
        let c = jet.coeff(&exps).unwrap();
        for (a, b) in c.iter().zip(&fd) {
            let err = (a - b).norm() / a.norm().max(1.0);
            assert!(err < 1e-6, "{src}: {exps:?} jet {a} fd {b}");
        }
    };
    let f0 = f(&vec![0.0; nv]);
    check(vec![0; nv], f0.clone());
    for v in 0..nv {
        let p = shift(&[(v, h)]);
        let m = shift(&[(v, -h)]);
        let mut e1 = vec![0u8; nv];
        e1[v] = 1;
        check(e1, (0..f0.len()).map(|k| (p[k] - m[k]) / (2.0 * h)).collect());
        let mut e2 = vec![0u8; nv];
        e2[v] = 2;
        check(
            e2,
            (0..f0.len())
                .map(|k| (p[k] - 2.0 * f0[k] + m[k]) / (2.0 * h * h))
                .collect(),
        );
        for w in v + 1..nv {
            let pp = shift(&[(v, h), (w, h)]);
            let pm = shift(&[(v, h), (w, -h)]);
            let mp = shift(&[(v, -h), (w, h)]);
            let mm = shift(&[(v, -h), (w, -h)]);
            let mut e11 = vec![0u8; nv];
            e11[v] = 1;
            e11[w] = 1;
            check(
                e11,
                (0..f0.len())
                    .map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h * h))
                    .collect(),
            );
        }
    }
}

#[test]
fn jets_match_finite_differences() {
    let flat = flat2();
    let curved = curved2();
    let x = [0.4, 1.1];
    let xi = [0.6, -0.8];
    for src in [
        "xi(1)^2 + 3*xi(1)*xi(2)",
        "cos(x(1))*xi(1) + sin(2*x(2))*xi(2)^2",
        "exp(i*x(1))*absxi_g",
        "absxi_g^-3 * xi(2)",
        "1/(2 + cos(x(1)*x(2)))",
        "pos(xi(1))*absxi_g + neg(xi(1))",
    ] {
        check_against_differences(src, &flat, 1, &x, &xi);
    }
    for src in [
        "gup(1,1)*xi(1)^2 + 2*gup(1,2)*xi(1)*xi(2) + gup(2,2)*xi(2)^2",
        "sqrtdetg*absxi_g",
        "gup(1,2)/sqrtdetg",
    ] {
        check_against_differences(src, &curved, 1, &x, &xi);
    }
    check_against_differences(
        "mat[[xi(1), i*cos(x(1))*xi(2)], [-i*xi(2), absxi_g]] * mat[[1, x(2)], [0, 2]]",
        &curved,
        2,
        &x,
        &xi,
    );
}

#[test]
fn metric_expressions_are_x_dependent_only_on_curved_charts() {
    let e = parse("gup(1,1)*xi(1)^2").unwrap();
    assert!(!e.depends_on_x(true));
    assert!(e.depends_on_x(false));
    assert_eq!(e.max_index(), Some(0));
    let _ = Arc::new(curved2());
}
