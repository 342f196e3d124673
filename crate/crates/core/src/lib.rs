//! Pseudo-spectral solver for the 2D incompressible Navier–Stokes equations
//! with a Smagorinsky eddy-viscosity term on the periodic square, together
//! with the energy, dissipation and Sobolev-norm diagnostics used to check
//! the solutions against their a priori bounds.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod integrator;
pub mod io;
pub mod ledger;
pub mod rhs;
pub mod spectral;

pub use error::{Error, Result};
