//! Approximate controls for the heat equation with memory,
//!
//! ```text
//! y' + A y = ∫₀ᵗ B(t, s) y(s) ds + G u,   y(0) = y0,
//! ```
//!
//! on a fully discrete scheme (piecewise-linear elements on (0, 1), backward
//! Euler, left-rectangle memory quadrature). Two control routes are provided:
//! a resolvent fixed-point iteration on the state trajectory, and a penalty
//! formulation whose optimality condition is solved by matrix-free CG.

// `!(x > 0.0)` deliberately rejects NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod convergence;
pub mod discretization;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod operators;
pub mod pide_solver;
pub mod spectral_oracle;
pub mod time;

pub use error::{Error, Result};
