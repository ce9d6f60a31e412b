//! Operator construction from config entries.

use std::collections::BTreeMap;
use std::sync::Arc;

use resdet::expr::{self, Expr};
use resdet::geometry::{build_metric, FourierTerm, MetricField, TorusChart};
use resdet::oplib::{
    dbar_symbols_t2, expr_term, laplace_symbol, negative_order_symbol, random_elliptic_symbol,
    winding_symbol_s1, LaplaceSpec, RandomOptions,
};
use resdet::symbols::ClassicalSymbol;

use crate::config::{BuilderParams, OperatorDef, SchemaError, TaskConfig};
use crate::CliError;

fn mode(wave: &[i32], cos: f64, sin: f64) -> FourierTerm {
    FourierTerm {
        wave: wave.to_vec(),
        cos,
        sin,
    }
}

pub fn chart(cfg: &TaskConfig) -> Result<Arc<TorusChart>, CliError> {
    let m = &cfg.manifold;
    let metric = MetricField {
        conformal: m
            .metric_fourier
            .conformal
            .iter()
            .map(|t| mode(&t.wave, t.cos, t.sin))
            .collect(),
        entries: m
            .metric_fourier
            .entries
            .iter()
            .map(|t| (t.i - 1, t.j - 1, mode(&t.wave, t.cos, t.sin)))
            .collect(),
    };
    build_metric(m.n, m.x_grid, metric)
        .map(Arc::new)
        .map_err(|e| CliError::numeric("/manifold", e))
}

/// Parses an expression and checks its indices against the torus dimension.
fn parse_expr(src: &str, n: usize, at: &str) -> Result<Expr, CliError> {
    let e = expr::parse(src).map_err(|e| CliError::Syntax {
        pointer: at.to_string(),
        error: e,
    })?;
    if let Some(k) = e.max_index() {
        if k >= n {
            return Err(SchemaError::new(at, format!("index {} used on T^{n}", k + 1)).into());
        }
    }
    Ok(e)
}

fn require<T: Copy>(v: Option<T>, at: &str, field: &str) -> Result<T, CliError> {
    v.ok_or_else(|| SchemaError::new(at, format!("`{field}` is required")).into())
}

fn build_one(
    def: &OperatorDef,
    at: &str,
    chart: &Arc<TorusChart>,
    seed: u64,
) -> Result<ClassicalSymbol, CliError> {
    let n = chart.n;
    let numeric = |e| CliError::numeric(at, e);
    if let Some(terms) = &def.terms {
        let order = def.order.expect("validated");
        let dim = def.dim.unwrap_or(1);
        let terms = terms
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let e = parse_expr(&t.expr, n, &format!("{at}/terms/{j}/expr"))?;
                expr_term(chart, dim, t.degree, e).map_err(numeric)
            })
            .collect::<Result<Vec<_>, _>>()?;
        return ClassicalSymbol::from_terms(n, dim, order, terms, def.exhaustive)
            .map(|s| s.with_label(def.name.clone()))
            .map_err(numeric);
    }
    let builder = def.builder.as_deref().expect("validated");
    let p = def.params.clone().unwrap_or_default();
    let pat = format!("{at}/params");
    let dim_n = |want: usize| -> Result<(), CliError> {
        if n != want {
            Err(SchemaError::new(format!("{at}/builder"), format!("`{builder}` needs n = {want}")).into())
        } else {
            Ok(())
        }
    };
    let sym = match builder {
        "laplace" => {
            let mut spec = LaplaceSpec {
                chart: chart.clone(),
                potential: None,
                rank: p.rank.unwrap_or(1),
                shift: p.t.unwrap_or(0.0),
            };
            if let Some(src) = &p.potential {
                spec.potential = Some(parse_expr(src, n, &format!("{pat}/potential"))?);
            }
            laplace_symbol(&spec).map_err(numeric)?
        }
        "identity" => ClassicalSymbol::identity(n, p.rank.unwrap_or(1)),
        "dbar_t2" => {
            dim_n(2)?;
            let (d, dd) = dbar_symbols_t2().map_err(numeric)?;
            match p.which.as_deref().unwrap_or("d") {
                "d" => d,
                "dstar_d" => dd,
                other => {
                    return Err(SchemaError::new(
                        format!("{pat}/which"),
                        format!("expected \"d\" or \"dstar_d\", got \"{other}\""),
                    )
                    .into())
                }
            }
        }
        "winding_s1" => {
            dim_n(1)?;
            winding_symbol_s1(require(p.w, &pat, "w")?).map_err(numeric)?
        }
        "random_negorder" | "random_elliptic" => {
            let order = require(p.order, &pat, "order")?;
            let opts = random_options(&p, n);
            let s = p.seed.unwrap_or(seed);
            if builder == "random_negorder" {
                if order >= 0 {
                    return Err(SchemaError::new(format!("{pat}/order"), "order must be negative").into());
                }
                negative_order_symbol(chart, order, s, opts).map_err(numeric)?
            } else {
                if order <= 0 {
                    return Err(SchemaError::new(format!("{pat}/order"), "order must be positive").into());
                }
                random_elliptic_symbol(chart, order, s, opts).map_err(numeric)?
            }
        }
        other => {
            return Err(SchemaError::new(
                format!("{at}/builder"),
                format!("unknown builder `{other}`"),
            )
            .into())
        }
    };
    Ok(sym.with_label(def.name.clone()))
}

fn random_options(p: &BuilderParams, n: usize) -> RandomOptions {
    RandomOptions {
        dim: p.dim.unwrap_or(1),
        x_dependent: p.x_dependent.unwrap_or(true),
        ..RandomOptions::for_chart(n)
    }
}

/// All operators of the config, by name.
pub fn build_all(
    cfg: &TaskConfig,
    chart: &Arc<TorusChart>,
) -> Result<BTreeMap<String, ClassicalSymbol>, CliError> {
    let mut out = BTreeMap::new();
    for (k, def) in cfg.operators.iter().enumerate() {
        let sym = build_one(def, &format!("/operators/{k}"), chart, cfg.seed)?;
        out.insert(def.name.clone(), sym);
    }
    Ok(out)
}
