//! Energy-factorization time stepping for the isothermal diffuse-interface
//! model with the Peng-Robinson equation of state.
//!
//! The crate is layered bottom-up:
//!
//! - [`eos`]: Peng-Robinson parameters, bulk free energy, chemical potential
//!   and pressure.
//! - [`ef_scheme`]: the factorized coefficients `G`, `nu`, `s_r` and the
//!   concavity shift `lambda`.
//! - [`grid`]: cell-centered differences with Neumann boundaries.
//! - [`diagnostics`]: discrete energy, admissible multiplier interval,
//!   droplet shape.
//! - [`solver`]: the mass-constrained linear step and the time loop.
//! - [`sim`]: configuration, initial data, output files and the experiment
//!   driver used by the `efpr` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod ef_scheme;
pub mod eos;
pub mod error;
pub mod grid;
pub mod sim;
pub mod solver;

pub use error::{Error, ErrorCategory, Result};
