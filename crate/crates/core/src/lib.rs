pub mod error;
pub mod expr;
pub mod functionals;
pub mod geometry;
pub mod jets;
mod linalg;
pub mod oplib;
pub mod symbols;

pub use error::{Error, Result};
pub use linalg::C64;
