//! Finite-difference micromagnetics with inertia.
//!
//! The core is a second-order, three-time-level semi-implicit scheme for the
//! inertial Landau-Lifshitz-Gilbert equation: one unsymmetric linear solve
//! (matrix-free GMRES) per step followed by a pointwise projection onto the
//! unit sphere.

pub mod banded;
pub mod demag;
pub mod driver;
pub mod energy;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod physics;
pub mod stepper;
pub mod vec3;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid, VectorField};
