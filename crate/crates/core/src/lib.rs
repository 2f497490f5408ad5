//! Entropy stable "modal" discontinuous Galerkin methods for the 2D
//! compressible Euler equations, built on skew-hybridized
//! summation-by-parts operators.
//!
//! The crate is layered bottom-up:
//!
//! - [`quadrature`]: 1D Gauss/Gauss–Lobatto rules, tensor and collapsed
//!   triangle rules, face rules.
//! - [`ref_elem`]: orthonormal bases and the quadrature-induced matrices on
//!   the reference triangle and quadrilateral.
//! - [`sbp`]: hybridized and skew-hybridized SBP operators, their curved
//!   counterparts, and the quadrature-accuracy checks behind them.
//! - [`mesh`]: periodic structured triangle/quad/hybrid meshes, curved
//!   mappings and geometric factors.
//! - [`euler`]: variable maps, entropy-conservative and Lax–Friedrichs
//!   fluxes, the isentropic vortex.
//! - [`solver`]: entropy projection, flux-differencing right-hand side and
//!   low-storage RK time stepping.
//! - [`diagnostics`]: entropy production, L2 errors, inverse/trace
//!   constants.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod euler;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod ref_elem;
pub mod sbp;
pub mod solver;

pub use error::{Error, Result};
pub use quadrature::ElementKind;
