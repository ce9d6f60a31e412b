//! Truncated Taylor jets with matrix coefficients.
//!
//! A [`Jet`] is the Taylor polynomial of a matrix-valued function of
//! `(x, xi)` at an [`Anchor`], truncated at a total degree. Every symbol
//! computation in this crate is carried out on jets: derivatives are read off
//! coefficients and products are truncated polynomial products.

mod basis;
mod contour;
mod jet;

pub use basis::{basis, Basis};
pub use contour::{
    arg_theta, distance_to_cut, eigen_log, jet_log_contour, jet_power_contour, log_theta,
    pow_theta, Circle, ContourSpec,
};
pub use jet::{product_truncated, Anchor, Jet, CONDITION_CAP};

pub(crate) use jet::{mul_acc_to, mul_to};

/// `jet_product`: truncated product of two jets on the same anchor/order/size.
pub fn jet_product(a: &Jet, b: &Jet) -> crate::Result<Jet> {
    a.product(b)
}

/// `jet_inverse`: two-sided inverse of a jet with invertible constant term.
pub fn jet_inverse(a: &Jet) -> crate::Result<Jet> {
    a.inverse()
}

/// `taylor_project`: drops all coefficients of total degree above `m`.
pub fn taylor_project(a: &Jet, m: i64) -> crate::Result<Jet> {
    a.taylor_project(m)
}
