use thiserror::Error;

/// Errors raised by the symbol calculus and the functionals built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular jet: constant term not invertible (condition estimate {cond:.3e})")]
    SingularJet { cond: f64 },

    #[error("eigenvalue {re:.6e}{im:+.6e}i lies on or too close to the spectral cut at angle {theta:.6}")]
    PrincipalAngleViolation { re: f64, im: f64, theta: f64 },

    #[error("invalid projection to order {requested} of a jet of order {order}")]
    InvalidProjection { requested: i64, order: usize },

    #[error("truncation underflow: slot {needed} requested but only {available} terms available")]
    TruncationUnderflow { needed: usize, available: usize },

    #[error("order mismatch: {0} and {1} do not differ by an integer")]
    OrderMismatch(f64, f64),

    #[error("resolvent singular at lambda = {re:.6e}{im:+.6e}i")]
    ResolventSingular { re: f64, im: f64 },

    #[error("symbol is not elliptic: principal symbol singular at x = {x:?}, xi = {xi:?}")]
    NotElliptic { x: Vec<f64>, xi: Vec<f64> },

    #[error("power series did not converge after {terms} terms (tail {tail:.3e})")]
    SeriesNotConverged { terms: usize, tail: f64 },

    #[error("metric not positive definite at grid node {node:?} (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { node: Vec<f64>, min_eig: f64 },

    #[error("unsupported torus dimension {0}; expected 1..=4")]
    UnsupportedDimension(usize),

    #[error("zeta function at zero is undefined for order-zero operators")]
    ZeroOrder,

    #[error("invalid order {0}: {1}")]
    InvalidOrder(f64, String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("evaluation domain error: {0}")]
    EvaluationDomain(String),
}

impl Error {
    /// Stable taxonomy name used in reports and exit diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::SingularJet { .. } => "SingularJet",
            Error::PrincipalAngleViolation { .. } => "PrincipalAngleViolation",
            Error::InvalidProjection { .. } => "InvalidProjection",
            Error::TruncationUnderflow { .. } => "TruncationUnderflow",
            Error::OrderMismatch(..) => "OrderMismatch",
            Error::ResolventSingular { .. } => "ResolventSingular",
            Error::NotElliptic { .. } => "NotElliptic",
            Error::SeriesNotConverged { .. } => "SeriesNotConverged",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::UnsupportedDimension(_) => "UnsupportedDimension",
            Error::ZeroOrder => "ZeroOrder",
            Error::InvalidOrder(..) => "InvalidOrder",
            Error::SyntaxError { .. } => "SyntaxError",
            Error::UnknownIdentifier { .. } => "UnknownIdentifier",
            Error::EvaluationDomain(_) => "EvaluationDomain",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
