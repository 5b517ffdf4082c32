//! Discrete Hermite, Laguerre and Jacobi ensembles built from spectral
//! projections of Jacobi matrices, together with the machinery that links
//! them to the ASEP and to the stochastic six-vertex model: orthogonal
//! polynomials, tridiagonal eigensolvers, Fredholm determinants, exact DPP
//! sampling, q-Laplace transforms, Schur measures and Monte Carlo
//! simulators.
//!
//! The numerical core is generic over a [`Real`] scalar; the aliases below
//! fix it to `f64`.

pub mod dpp;
pub mod error;
pub mod fredholm;
pub mod harness;
pub mod kernels;
pub mod orthopoly;
pub mod qlaplace;
pub mod quadrature;
pub mod scalar;
pub mod schur;
pub mod simulators;
pub mod special;
pub mod tridiag;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FamilySpec = orthopoly::FamilySpec<f64>;
pub type EnsembleSpec = kernels::EnsembleSpec<f64>;
pub type KernelMatrix = kernels::KernelMatrix<f64>;
pub type TridiagMatrix = tridiag::TridiagMatrix<f64>;
pub type SymTridiag = tridiag::SymTridiag<f64>;
