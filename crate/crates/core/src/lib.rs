//! Numerics for quasi-periodic Schrödinger operators with analytic
//! potentials: complexified Lyapunov exponents and their acceleration,
//! zeros of finite-volume Dirichlet determinants, potential theory on
//! annuli, the integrated density of states and localization diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod determinant;
pub mod error;
pub mod green;
pub mod harness;
pub mod localize;
pub mod model;
pub mod numeric;
pub mod riesz;
pub mod spectral;
pub mod zeros;

pub use error::{Error, Result};
