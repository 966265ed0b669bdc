//! Admissibility analysis and spectral simulation for stochastic
//! reaction–diffusion–advection equations driven by subordinate Brownian
//! motion generators `φ(Δ)` and spatially homogeneous colored noise.
//!
//! The crate splits into an analytic half (Bernstein catalog, Bessel
//! kernels, correlation measures, exact admissibility algebra) and a
//! simulation half (subordinator and noise samplers, exponential-Euler
//! solver, Hölder-regularity estimators).

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod comparisons;
pub mod correlation;
pub mod error;
pub mod feasibility;
pub mod fit;
pub mod grid;
pub mod kernel;
pub mod notation;
pub mod quadrature;
pub mod rational;
pub mod regularity;
pub mod solver;
pub mod stochastics;

pub use error::{Error, Result};
