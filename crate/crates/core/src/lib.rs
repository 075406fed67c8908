//! Spectral stability lab for the 2D Boussinesq system linearized around
//! stratified Couette flow `U(y) = y` with buoyancy frequency `β`.
//!
//! Layers:
//! - [`spectral`]: frequency lattice, moving-frame symbol, norms.
//! - [`linear`]: exact per-mode evolution, symmetric variables, energy functional.
//! - [`diagnostics`]: power-law fits and envelope checks.
//! - [`eigen`]: Rayleigh–Taylor and Taylor–Goldstein spectra.
//! - [`toy`]: two-mode echo model and cascade arithmetic.
//! - [`nonlinear`]: pseudo-spectral solver in shearing coordinates.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod linear;
pub mod nonlinear;
pub mod ode;
pub mod spectral;
pub mod toy;

pub use error::{Error, Result};
pub use spectral::{Component, Lattice, Mode, ModeState, PhysicalParams, SpectralField};
