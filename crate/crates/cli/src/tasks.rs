//! Task execution.

use std::collections::BTreeMap;

use resdet::functionals::{
    index_from_res, log_det_res, log_det_res_one_plus, log_det_zero, residue_trace, zeta_at_zero,
    zeta_shift_polynomial, Numerics,
};
use resdet::geometry::TorusChart;
use resdet::symbols::{compose_stacks, resolvent_stack, ClassicalSymbol, SymbolJetStack};
use resdet::C64;

use crate::config::{TaskConfig, TaskDef, TaskKind};
use crate::report::{ShiftValue, TaskReport};
use crate::{selfcheck, CliError};

pub struct Context<'a> {
    pub cfg: &'a TaskConfig,
    pub chart: &'a TorusChart,
    pub ops: &'a BTreeMap<String, ClassicalSymbol>,
    pub hash: String,
    pub verify: bool,
}

/// Effective numerics for one task; `theta` in degrees.
fn numerics(cfg: &TaskConfig, task: &TaskDef) -> Numerics {
    let mut nm = Numerics::for_dimension(cfg.manifold.n);
    let c = &cfg.numerics;
    if let Some(v) = c.sphere_res {
        nm.sphere_resolution = v;
    }
    if let Some(v) = c.contour_nodes {
        nm.contour_nodes = v;
    }
    if let Some(deg) = task.theta.or(c.theta) {
        nm.theta = deg.to_radians();
    }
    if c.estimate_error == Some(false) {
        nm = nm.without_error_estimate();
    }
    nm
}

fn echo_params(r: &mut TaskReport, cx: &Context<'_>, nm: &Numerics) {
    let p = &mut r.params;
    p.insert("x_grid".into(), cx.chart.x_grid as f64);
    p.insert("sphere_resolution".into(), nm.sphere_resolution as f64);
    p.insert("contour_nodes".into(), nm.contour_nodes as f64);
    p.insert("theta".into(), nm.theta);
    p.insert("theta_degrees".into(), nm.theta.to_degrees());
    p.insert("seed".into(), cx.cfg.seed as f64);
    p.insert("estimate_error".into(), if nm.estimate_error { 1.0 } else { 0.0 });
    if let Some(j) = cx.cfg.numerics.jet_order {
        p.insert("jet_order".into(), j as f64);
    }
}

/// Largest deviation of `(a - λ) ∘ r(λ)` from the identity over a few
/// cosphere points, with `λ` on the cut ray (weighted like `a_0`).
fn resolvent_defect(a: &ClassicalSymbol, theta: f64) -> resdet::Result<f64> {
    let n = a.n();
    let dim = a.dim();
    let lambda = C64::from_polar(1.0, theta);
    let shift: Vec<C64> = (0..dim * dim)
        .map(|k| if k % (dim + 1) == 0 { -lambda } else { C64::new(0.0, 0.0) })
        .collect();
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let t = 0.7 + 1.3 * k as f64;
        let x: Vec<f64> = (0..n).map(|i| t * (i + 1) as f64).collect();
        let mut xi: Vec<f64> = (0..n).map(|i| (t + i as f64).cos()).collect();
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        xi.iter_mut().for_each(|v| *v /= norm);
        let anchor = a.anchor_at(&x, &xi);
        let sa = a.stack(&anchor, n)?;
        let r = resolvent_stack(&sa, lambda)?;
        let mut slots = sa.slots().to_vec();
        slots[0] = slots[0].add_constant(&shift);
        let shifted = SymbolJetStack::new(anchor.clone(), dim, slots)?;
        let prod = compose_stacks(&shifted, &r)?;
        let id = SymbolJetStack::identity(&anchor, dim, &prod.orders());
        worst = worst.max(prod.max_abs_diff(&id));
    }
    Ok(worst)
}

const VERIFY_TOL: f64 = 1e-8;

pub fn run(cx: &Context<'_>, index: usize, task: &TaskDef) -> Result<TaskReport, CliError> {
    let at = format!("/tasks/{index}");
    let numeric = |e| CliError::numeric(&at, e);
    let nm = numerics(cx.cfg, task);
    let mut report = TaskReport::new(
        task.kind.name(),
        task.display_name(),
        task.operator.clone(),
        &cx.hash,
    );
    if task.kind == TaskKind::Selfcheck {
        selfcheck::run(cx.cfg, &mut report);
        echo_params(&mut report, cx, &nm);
        return Ok(report);
    }
    let a = &cx.ops[task.operator.as_deref().expect("validated")];
    let chart = cx.chart;
    match task.kind {
        TaskKind::Res => report.absorb(&residue_trace(a, chart, &nm).map_err(numeric)?),
        TaskKind::Detres => report.absorb(&log_det_res(a, chart, &nm).map_err(numeric)?),
        TaskKind::Det0 => report.absorb(&log_det_zero(a, chart, &nm).map_err(numeric)?),
        TaskKind::Zeta0 => report.absorb(&zeta_at_zero(a, chart, &nm, task.h0).map_err(numeric)?),
        TaskKind::DetresOnePlus => {
            report.absorb(&log_det_res_one_plus(a, chart, &nm).map_err(numeric)?)
        }
        TaskKind::Index => {
            let r = index_from_res(a, chart, &nm).map_err(numeric)?;
            report.absorb(&r.log_det_dd_star);
            report.exp_value_re = None;
            report.exp_value_im = None;
            report.set_value(C64::new(r.raw, 0.0));
            // density of the index: (1/2d)(dens(DD*+I) - dens(D*D+I))
            let scale = 1.0 / (2.0 * a.order());
            for (d, b) in report.density.iter_mut().zip(&r.log_det_d_star_d.density) {
                d.value = (d.value - b.value.re) * scale;
                d.value_im = (d.value_im - b.value.im) * scale;
            }
            report.quad_error = (r.log_det_dd_star.quad_error + r.log_det_d_star_d.quad_error) * scale;
            report.params.insert("index_nearest".into(), r.nearest as f64);
        }
        TaskKind::ZetaPoly => {
            let shifts = match &task.shifts {
                Some(names) => names
                    .iter()
                    .map(|s| s.as_ref().map(|name| cx.ops[name].clone()))
                    .collect(),
                None => vec![None, Some(ClassicalSymbol::identity(a.n(), a.dim()))],
            };
            let p = zeta_shift_polynomial(a, &shifts, chart, &nm).map_err(numeric)?;
            let h0 = task.h0 as f64;
            report.set_value(p.coefficients[0] - h0);
            report.quad_error = p.quad_error;
            report.coefficients = Some(p.coefficients.iter().map(|c| [c.re, c.im]).collect());
            report.values = Some(
                task.t
                    .iter()
                    .map(|&t| {
                        let v = p.eval(t) - h0;
                        ShiftValue {
                            t,
                            value_re: v.re,
                            value_im: v.im,
                        }
                    })
                    .collect(),
            );
            report.params.insert("h0".into(), h0);
            report.params.insert("degree".into(), p.degree() as f64);
        }
        TaskKind::Selfcheck => unreachable!(),
    }
    echo_params(&mut report, cx, &nm);
    if cx.verify && a.order() > 0.0 {
        let d = resolvent_defect(a, nm.theta).map_err(numeric)?;
        report.params.insert("verify_max_defect".into(), d);
        if !(d <= VERIFY_TOL) {
            return Err(CliError::Verify {
                pointer: at,
                defect: d,
            });
        }
    }
    Ok(report)
}
