//! Spectra of linearizations at rotating waves.
//!
//! The analytical side (assumption checks, spectral constants, symmetry and
//! dispersion sets, heat kernel, decay bounds) is cross-validated against a
//! finite-difference pipeline on the cubic-quintic Ginzburg-Landau equation:
//! freezing-method profile, sparse linearization, shift-invert Arnoldi.

pub mod coeffs;
pub mod discretize;
pub mod dispersion;
pub mod error;
pub mod freeze;
pub mod linalg;
pub mod qcgl;
pub mod spectra;
pub mod symmetry;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
