//! Continuous/discontinuous Galerkin discretization of the biharmonic
//! equation `Delta_Gamma^2 u = f` on closed surfaces in 3-space.
//!
//! The pipeline is: [`geometry`] (analytic surfaces) -> [`mesh`] (facet
//! surfaces) -> [`femspace`] (continuous P2 space) -> [`assembly`] (interior
//! penalty system and constrained solve) -> [`verify`] (error norms, rates).
//! [`problems`] holds the two model problems and [`study`] drives
//! convergence sweeps.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod exec;
pub mod femspace;
pub mod geometry;
pub mod mesh;
pub mod problems;
pub mod sparse;
pub mod study;
pub mod verify;

pub use error::{CdgError, Result};
pub use exec::Execution;
pub use geometry::{ImplicitSurface, Vec3};
pub use mesh::TriangleMesh;
