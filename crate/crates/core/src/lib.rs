//! Distributions of linear forms of independent Goldstein-Kac telegraph
//! processes: exact singular atoms, characteristic functions, density
//! inversion, the order-2^n governing operator as an exact determinant,
//! Monte Carlo validation, and the Brownian (Kac) limit.

pub mod cli;
pub mod error;
pub mod linear_form;
pub mod model;
pub mod montecarlo;
pub(crate) mod numeric;
pub mod operator_algebra;
pub mod selftest;
pub mod telegraph;
pub mod verifier;

pub use error::{Error, Result};
