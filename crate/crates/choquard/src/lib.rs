//! Numerical toolkit for ground states of the nonlinear Choquard equation
//!
//! ```text
//! -Delta u + u = (I_alpha * F(u)) F'(u)   in R^N,  N in {2, 3},
//! ```
//!
//! with the Riesz potential I_alpha and a power-sum nonlinearity
//! F(s) = sum_i c_i |s|^{p_i} / p_i. The crate provides:
//!
//! * periodic pseudospectral grids with spectral differentiation ([`grid`]),
//! * free-space Riesz convolution by Hockney zero padding, with a direct-sum
//!   oracle backend ([`riesz`]),
//! * the energy functional, Euler-Lagrange residual, Pohozaev and Nehari
//!   identities, dilation-path energies in closed form, and analytic
//!   hypothesis checks ([`model`]),
//! * a ground-state solver minimizing the amplitude-invariant Weinstein
//!   quotient with Sobolev-preconditioned Armijo descent, plus certification
//!   of the computed state ([`solver`]),
//! * parameter sweeps over (N, alpha, p) reproducing the sharp
//!   existence/nonexistence dichotomy for power nonlinearities ([`sweep`]),
//! * a plain-text config format, a headered binary field format, and CSV /
//!   JSON-lines emitters backing the `choquard` command-line tool
//!   ([`config`], [`fieldfile`], [`report`]).

pub mod config;
pub mod error;
pub mod fieldfile;
pub mod grid;
pub mod model;
pub mod report;
pub mod riesz;
pub mod solver;
mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use grid::{make_grid, Field, GridSpec};
pub use riesz::{riesz_constant, RieszKernel};
