//! Numerical laboratory for the doubly degenerate diffusion equation
//! `u_t = u^m div(|Du|^{p(x)-2} Du)` on an interval.
//!
//! The equation is regularized by lifting the data by `eps`, transformed to
//! divergence form via `v = Phi(u)`, solved implicitly, and driven towards
//! `eps -> 0`. The remaining modules check the functional inequalities and
//! qualitative properties the construction relies on.

pub mod config;
pub mod continuation;
pub mod error;
pub mod fuzz;
pub mod grid;
pub mod lebesgue;
pub mod monotonicity;
pub mod output;
pub mod pipeline;
pub mod solver;
pub mod transforms;
pub mod verification;

pub use error::{Error, Result};
