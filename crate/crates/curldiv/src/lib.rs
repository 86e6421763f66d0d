//! Isogeometric Galerkin discretization of the parameter-dependent curl-div
//! operator on the unit square and cube.
//!
//! The crate builds the tensor-product B-spline stiffness structure from 1D
//! banded factors, evaluates the operator's Fourier symbol and the closed-form
//! eigenvalue bounds that come with it, and solves the resulting linear
//! systems with symbol-guided multi-iterative schemes (a multigrid V-cycle
//! with Krylov smoothing on the finest level, optionally wrapped in a
//! flexible conjugate gradient iteration) next to plain CG baselines.

pub mod banded;
pub mod bspline;
pub mod dense;
pub mod eigen;
mod error;
pub mod figures;
pub mod galerkin;
pub mod gauss;
pub mod kron;
pub mod krylov;
pub mod manufactured;
pub mod multigrid;
pub mod spectrum;
pub mod symbol;
pub mod tables;

pub use error::{Error, Result};
