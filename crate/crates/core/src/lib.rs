//! Geodesic flows, Riccati solutions and Lyapunov exponents on model
//! Riemannian manifolds.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod error;
pub mod experiment;
pub mod integrator;
mod linalg;
pub mod lyapunov;
pub mod models;

pub use error::{Error, Result};
