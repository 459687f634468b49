//! Trigonometric time stepping for stochastic Schrödinger-type systems in one
//! space dimension: spectral reference quantities, a P1 finite element
//! discretization, Q-Wiener noise and strong-error measurement.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fem1d;
pub mod noise;
pub mod quadrature;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
