//! Numerical laboratory for the linear and semilinear Dirac equation on
//! spatially flat FLRW backgrounds with scale factor `a(t) = a0 t^ell` and a
//! time-decaying complex mass `m / t`.
//!
//! The crate is organised bottom-up:
//!
//! - [`gamma`]: Dirac-representation matrices.
//! - [`spacetime`]: scale factor, conformal time `phi`, cones.
//! - [`field`]: spinor fields on a periodic grid, spectral derivatives, bilinears.
//! - [`models`]: mass, potentials and nonlinearities.
//! - [`solver`]: RK4 method-of-lines integration and run records.
//! - [`kernels`]: hypergeometric kernels and the explicit free propagator.
//! - [`diagnostics`]: identity checks, decay fits, scattering.
//! - [`blowup`]: regime classification and lifespan bounds.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod gamma;
pub mod hyp2f1;
pub mod init;
pub mod kernels;
pub mod models;
pub mod quadrature;
pub mod snapshot;
pub mod solver;
pub mod spacetime;
mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
