//! Periodic grid, transforms, spectral differentiation, Leray projection and norms.

mod fft;
mod field;
mod grid;
pub mod norms;
mod ops;

pub use fft::Transform;
pub use field::{RealField, SpectralField, SpectralVelocity};
pub use grid::{Grid, Modes, DIM};
pub use norms::{
    h_minus_one_norm, l2_inner, lp_norm, poincare_constant, sobolev_norm, SobolevOrder,
    SobolevVariant,
};
pub use ops::{
    divergence_of_tensor, gradient, gradient_of, gradient_spectra, leray_project,
    velocity_from_streamfunction,
};
