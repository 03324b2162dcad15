//! Hierarchical model reduction for a 1D kinetic transport equation with
//! Laplace-Beltrami velocity diffusion.
//!
//! The crate builds problem-adapted velocity bases (either greedily from
//! snapshots of a parametrized elliptic velocity PDE, or from Legendre
//! polynomials), assembles the reduced hyperbolic moment system, solves it
//! with an upwind finite volume scheme, and provides a full-dimensional
//! finite difference reference solver for error studies.

pub mod basis;
pub mod error;
pub mod greedy;
pub mod moment;
pub mod parallel;
pub mod problem;
pub mod reference;
pub mod snapshot;
pub mod tridiag;
pub mod velocity_fem;

pub use error::{Error, Result};
