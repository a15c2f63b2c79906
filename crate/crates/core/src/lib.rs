//! Spectral thresholds of the Dirichlet p-Laplacian in bent and twisted
//! tubes.
//!
//! A tube is described by curvature and twist profiles along a reference
//! curve and a cross-section `ω`. In curvilinear coordinates the tube
//! becomes the straight product `ℝ × ω` with a modified metric; the crate
//! discretizes the resulting Rayleigh quotient with tensor-product linear
//! elements and minimizes it.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod cross_section;
pub mod eigensolver;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod quadrature;
pub mod tube_form;

pub use error::{Error, Result};
