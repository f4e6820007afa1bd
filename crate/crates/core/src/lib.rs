//! Spectral-Galerkin laboratory for the dissipative Kirchhoff equation
//!
//! ```text
//! eps u''(t) + b(t) u'(t) + m(|A^{1/2} u(t)|^2) A u(t) = 0
//! ```
//!
//! and its parabolic limit `b(t) u' + m(|A^{1/2} u|^2) A u = 0`.
//!
//! The operator `A` is represented by a finite list of eigenvalues, so every
//! Galerkin truncation is an exact finite-dimensional instance of the abstract
//! problem. On top of the solvers sit the energy functionals, decay-rate fits,
//! theoretical bound tables, singular-perturbation error measurement and an
//! experiment harness that writes reproducible CSV/JSON/SVG bundles.

pub mod analysis;
pub mod energies;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod model;
pub mod rk;
pub mod spectral;

pub use error::{Error, Result};
