//! Numerical laboratory for two-dimensional incompressible flow in a disk with
//! Navier friction (slip) boundary conditions.
//!
//! The vorticity-streamfunction system is discretized with a Fourier series in
//! angle and second-order finite volumes in radius. Besides the time
//! integrator the crate provides the construction of compatible initial data,
//! the comparison (Fokker-Planck) problem, a radial reference solver and the
//! diagnostics used to check vorticity bounds and the vanishing viscosity limit.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fourier;
pub mod geometry;
pub mod tridiag;
pub mod elliptic;
pub mod compat;
pub mod solver;
pub mod diagnostics;
pub mod harness;
pub mod acceptance;

pub use error::{Error, Result};
