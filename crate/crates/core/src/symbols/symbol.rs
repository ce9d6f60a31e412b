use std::fmt;
use std::sync::Arc;

use super::calculus;
use super::stack::{graded, SymbolJetStack};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::QuadratureGrid;
use crate::jets::{Anchor, Jet, CONDITION_CAP};
use crate::linalg::{self, C64};

/// Evaluates one homogeneous term: `(anchor, order) -> jet at the anchor`.
pub type TermFn = Arc<dyn Fn(&Arc<Anchor>, usize) -> Result<Jet> + Send + Sync>;

/// Evaluates a whole ladder at once for the given per-slot orders.
pub type LadderFn = Arc<dyn Fn(&Arc<Anchor>, &[usize]) -> Result<SymbolJetStack> + Send + Sync>;

/// A term `a_j(x, ξ)`, positively homogeneous of `degree` in `ξ` for `|ξ| >= 1`.
#[derive(Clone)]
pub struct HomogeneousTerm {
    pub degree: f64,
    pub x_independent: bool,
    pub source: Option<Arc<Expr>>,
    eval: TermFn,
}

impl fmt::Debug for HomogeneousTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousTerm")
            .field("degree", &self.degree)
            .field("x_independent", &self.x_independent)
            .field("source", &self.source.as_ref().map(|e| e.to_string()))
            .finish()
    }
}

impl HomogeneousTerm {
    pub fn new(degree: f64, x_independent: bool, eval: TermFn) -> Self {
        HomogeneousTerm {
            degree,
            x_independent,
            source: None,
            eval,
        }
    }

    pub fn with_source(mut self, source: Arc<Expr>) -> Self {
        self.source = Some(source);
        self
    }

    /// The zero term of the given degree.
    pub fn zero(degree: f64, dim: usize) -> Self {
        Self::new(
            degree,
            true,
            Arc::new(move |a, order| Ok(Jet::zero(a, order, dim))),
        )
    }

    /// A constant matrix term (row-major).
    pub fn constant(degree: f64, value: Vec<C64>) -> Self {
        let dim = (value.len() as f64).sqrt() as usize;
        Self::new(
            degree,
            true,
            Arc::new(move |a, order| Ok(Jet::constant(a, order, dim, &value))),
        )
    }

    pub fn eval(&self, anchor: &Arc<Anchor>, order: usize) -> Result<Jet> {
        (self.eval)(anchor, order)
    }

    /// Checks `a(x, tξ) = t^degree a(x, ξ)` at `t ∈ {1.5, 2}` on the sampled
    /// points, returning the largest relative error.
    pub fn homogeneity_error(&self, points: &[Arc<Anchor>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in points {
            let base = self.eval(p, 0)?;
            let scale = linalg::max_abs(base.value()).max(1e-300);
            for t in [1.5, 2.0] {
                let v = self.eval(&p.scaled(t), 0)?;
                let f = t.powf(self.degree);
                let err = base
                    .value()
                    .iter()
                    .zip(v.value())
                    .map(|(a, b)| (a * f - b).norm())
                    .fold(0.0, linalg::nan_max);
                worst = linalg::nan_max(worst, err / (scale * f));
            }
        }
        Ok(worst)
    }
}

#[derive(Clone)]
enum Ladder {
    Terms {
        terms: Vec<HomogeneousTerm>,
        exhaustive: bool,
    },
    Derived {
        eval: LadderFn,
        depth: Option<usize>,
    },
}

/// A classical symbol `a ~ Σ_j a_j` with `a_j` homogeneous of degree `α - j`
/// on the torus `T^n`, valued in `N x N` complex matrices.
#[derive(Clone)]
pub struct ClassicalSymbol {
    n: usize,
    dim: usize,
    order: f64,
    x_independent: bool,
    ladder: Ladder,
    elliptic: bool,
    label: String,
}

impl fmt::Debug for ClassicalSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassicalSymbol")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("x_independent", &self.x_independent)
            .field("elliptic", &self.elliptic)
            .finish()
    }
}

/// `true` when `v` is an integer up to round-off.
pub fn is_integer(v: f64) -> bool {
    (v - v.round()).abs() < 1e-12
}

impl ClassicalSymbol {
    /// Symbol from an explicit ladder. Term `j` must have degree `order - j`.
    /// With `exhaustive` every term past the list is zero (differential
    /// operators, finite expansions); otherwise requesting a slot past the
    /// list is a [`Error::TruncationUnderflow`].
    pub fn from_terms(
        n: usize,
        dim: usize,
        order: f64,
        terms: Vec<HomogeneousTerm>,
        exhaustive: bool,
    ) -> Result<Self> {
        if !(1..=4).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        for (j, t) in terms.iter().enumerate() {
            if (t.degree - (order - j as f64)).abs() > 1e-12 {
                return Err(Error::InvalidOrder(
                    t.degree,
                    format!("term {j} must have degree {}", order - j as f64),
                ));
            }
        }
        let x_independent = terms.iter().all(|t| t.x_independent);
        Ok(ClassicalSymbol {
            n,
            dim,
            order,
            x_independent,
            ladder: Ladder::Terms { terms, exhaustive },
            elliptic: false,
            label: String::new(),
        })
    }

    /// Symbol whose whole ladder is produced by `eval`; `depth` is the number
    /// of available slots (`None` for unlimited).
    pub fn derived(
        n: usize,
        dim: usize,
        order: f64,
        x_independent: bool,
        depth: Option<usize>,
        eval: LadderFn,
    ) -> Self {
        ClassicalSymbol {
            n,
            dim,
            order,
            x_independent,
            ladder: Ladder::Derived { eval, depth },
            elliptic: false,
            label: String::new(),
        }
    }

    /// The identity `(I, 0, 0, ...)`, order 0.
    pub fn identity(n: usize, dim: usize) -> Self {
        Self::from_terms(
            n,
            dim,
            0.0,
            vec![HomogeneousTerm::constant(0.0, linalg::identity(dim))],
            true,
        )
        .expect("identity symbol")
        .with_label("I")
    }

    /// The constant symbol `c I` of order 0.
    pub fn scalar_constant(n: usize, dim: usize, c: C64) -> Self {
        let v: Vec<C64> = linalg::identity(dim).into_iter().map(|z| z * c).collect();
        Self::from_terms(n, dim, 0.0, vec![HomogeneousTerm::constant(0.0, v)], true)
            .expect("constant symbol")
    }

    /// The zero symbol of the given order.
    pub fn zero(n: usize, dim: usize, order: f64) -> Self {
        Self::from_terms(n, dim, order, vec![], true).expect("zero symbol")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn x_independent(&self) -> bool {
        self.x_independent
    }

    pub fn is_elliptic(&self) -> bool {
        self.elliptic
    }

    /// Explicit terms, if the ladder was given term by term.
    pub fn terms(&self) -> Option<&[HomogeneousTerm]> {
        match &self.ladder {
            Ladder::Terms { terms, .. } => Some(terms),
            Ladder::Derived { .. } => None,
        }
    }

    /// Number of slots that can be evaluated (`None` for unlimited).
    pub fn depth(&self) -> Option<usize> {
        match &self.ladder {
            Ladder::Terms {
                terms,
                exhaustive: false,
            } => Some(terms.len()),
            Ladder::Terms { .. } => None,
            Ladder::Derived { depth, .. } => *depth,
        }
    }

    /// Anchor at `(x, ξ)` carrying x-variables only when needed.
    pub fn anchor_at(&self, x: &[f64], xi: &[f64]) -> Arc<Anchor> {
        Anchor::new(x.to_vec(), xi.to_vec(), !self.x_independent)
    }

    /// Evaluates slots `0..orders.len()` with slot `j` at jet order `orders[j]`.
    pub fn eval_slots(&self, anchor: &Arc<Anchor>, orders: &[usize]) -> Result<SymbolJetStack> {
        if anchor.n() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "anchor of dimension {} for a symbol on T^{}",
                anchor.n(),
                self.n
            )));
        }
        if !self.x_independent && !anchor.with_x {
            return Err(Error::ShapeMismatch(
                "x-dependent symbol evaluated on an anchor without x-variables".into(),
            ));
        }
        if let Some(depth) = self.depth() {
            if orders.len() > depth {
                return Err(Error::TruncationUnderflow {
                    needed: orders.len() - 1,
                    available: depth,
                });
            }
        }
        match &self.ladder {
            Ladder::Terms { terms, .. } => {
                let slots = orders
                    .iter()
                    .enumerate()
                    .map(|(j, &o)| match terms.get(j) {
                        Some(t) => {
                            let jet = t.eval(anchor, o)?;
                            if jet.dim() != self.dim || jet.order() != o {
                                return Err(Error::ShapeMismatch(format!(
                                    "term {j} returned a {}x{} jet of order {} (expected {}x{} order {o})",
                                    jet.dim(),
                                    jet.dim(),
                                    jet.order(),
                                    self.dim,
                                    self.dim
                                )));
                            }
                            Ok(jet)
                        }
                        None => Ok(Jet::zero(anchor, o, self.dim)),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SymbolJetStack::from_slots_unchecked(
                    anchor.clone(),
                    self.dim,
                    slots,
                ))
            }
            Ladder::Derived { eval, .. } => eval(anchor, orders),
        }
    }

    /// Graded stack of top `top`: slots `0..=top`, slot `j` at order `top - j`.
    pub fn stack(&self, anchor: &Arc<Anchor>, top: usize) -> Result<SymbolJetStack> {
        self.eval_slots(anchor, &graded(top))
    }

    /// Value of slot `j` at `(x, ξ)`.
    pub fn term_value(&self, j: usize, x: &[f64], xi: &[f64]) -> Result<Vec<C64>> {
        let anchor = self.anchor_at(x, xi);
        let mut orders = vec![0; j + 1];
        orders[j] = 0;
        Ok(self.eval_slots(&anchor, &orders)?.slot(j).value().to_vec())
    }

    /// Largest relative homogeneity error of the explicit terms.
    pub fn homogeneity_error(&self, points: &[Arc<Anchor>]) -> Result<f64> {
        match &self.ladder {
            Ladder::Terms { terms, .. } => terms
                .iter()
                .map(|t| t.homogeneity_error(points))
                .try_fold(0.0f64, |acc, e| Ok(acc.max(e?))),
            Ladder::Derived { .. } => {
                let mut worst: f64 = 0.0;
                let depth = self.depth().unwrap_or(self.n + 1).min(self.n + 1);
                for p in points {
                    let base = self.eval_slots(p, &vec![0; depth])?;
                    for t in [1.5, 2.0] {
                        let v = self.eval_slots(&p.scaled(t), &vec![0; depth])?;
                        for j in 0..depth {
                            let f = t.powf(self.order - j as f64);
                            let b = base.slot(j).value();
                            let scale = linalg::max_abs(b).max(1e-300);
                            let err = b
                                .iter()
                                .zip(v.slot(j).value())
                                .map(|(a, c)| (a * f - c).norm())
                                .fold(0.0, linalg::nan_max);
                            if linalg::max_abs(b) > 1e-14 {
                                worst = linalg::nan_max(worst, err / (scale * f));
                            }
                        }
                    }
                }
                Ok(worst)
            }
        }
    }

    /// Checks that `a_0` is invertible (condition number below the cap) at
    /// every `(x, ξ)` node of `grid`; on success the ellipticity flag is set.
    pub fn check_elliptic(mut self, grid: &QuadratureGrid) -> Result<Self> {
        for x in &grid.x_nodes {
            for xi in &grid.sphere_nodes {
                self.ensure_invertible_principal(x, xi)?;
            }
        }
        self.elliptic = true;
        Ok(self)
    }

    pub(crate) fn ensure_invertible_principal(&self, x: &[f64], xi: &[f64]) -> Result<()> {
        let a0 = self.term_value(0, x, xi)?;
        match linalg::inverse(&a0, self.dim) {
            Some((_, cond)) if cond <= CONDITION_CAP => Ok(()),
            _ => Err(Error::NotElliptic {
                x: x.to_vec(),
                xi: xi.to_vec(),
            }),
        }
    }

    /// `c · a`.
    pub fn scaled(&self, c: C64) -> ClassicalSymbol {
        let inner = self.clone();
        ClassicalSymbol::derived(
            self.n,
            self.dim,
            self.order,
            self.x_independent,
            self.depth(),
            Arc::new(move |anchor, orders| Ok(inner.eval_slots(anchor, orders)?.scale(c))),
        )
        .with_label(format!("{c}*{}", self.label))
    }

    /// The symbol of the composition `a ∘ b`.
    pub fn composed(a: &ClassicalSymbol, b: &ClassicalSymbol) -> Result<ClassicalSymbol> {
        if a.n != b.n || a.dim != b.dim {
            return Err(Error::ShapeMismatch("compose: chart or rank differ".into()));
        }
        let depth = match (a.depth(), b.depth()) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        };
        let (ac, bc) = (a.clone(), b.clone());
        Ok(ClassicalSymbol::derived(
            a.n,
            a.dim,
            a.order + b.order,
            a.x_independent && b.x_independent,
            depth,
            Arc::new(move |anchor, orders| {
                let need = super::stack::leibniz_requirement(orders);
                let sa = ac.eval_slots(anchor, &need)?;
                let sb = bc.eval_slots(anchor, &need)?;
                calculus::compose_stacks_to(&sa, &sb, orders)
            }),
        )
        .with_label(format!("({})∘({})", a.label, b.label)))
    }

    /// `a^k` by repeated composition (`k >= 1`).
    pub fn power(a: &ClassicalSymbol, k: usize) -> Result<ClassicalSymbol> {
        assert!(k >= 1);
        let mut p = a.clone();
        for _ in 1..k {
            p = ClassicalSymbol::composed(&p, a)?;
        }
        Ok(p)
    }
}
