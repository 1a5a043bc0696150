//! Faedo–Galerkin approximation of nonlinear evolution equations
//! `y′ + A(t)y = f` on the intersection space `V ∩ H`, with sampled probes
//! of the structural conditions on `A` and explicit Gronwall bounds.
//!
//! The crate covers unsteady p-Laplace problems with Nemyckii perturbations
//! on intervals and squares, and a shear-thickening fluid model on the
//! two-dimensional torus.

pub mod apriori;
pub mod config;
pub mod error;
pub mod forcing;
pub mod function_space;
pub mod operators;
pub mod output;
pub mod probes;
pub mod quadrature;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
