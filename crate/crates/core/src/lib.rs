//! Rotating vortex patches (V-states) of the 2D Euler equations: patch
//! geometry, Newtonian potential quadrature, variational identities,
//! an explicit transport map to the disk, branch continuation and
//! empirical bound scans.
//!
//! Everything is generic over the scalar [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below are the usual entry points.

pub mod error;
pub mod geometry;
pub mod identities;
pub mod optim;
pub mod potential;
pub mod quad;
pub mod real;
pub mod bounds;
pub mod transport;
pub mod vstates;

pub use error::{Error, Result};
pub use real::Real;

pub type PolarPatchF64 = geometry::PolarPatch<f64>;
pub type PolarPatchF32 = geometry::PolarPatch<f32>;
pub type EllipsePatchF64 = geometry::EllipsePatch<f64>;
pub type EllipsePatchF32 = geometry::EllipsePatch<f32>;
pub type RotatingStateF64 = geometry::RotatingState<f64>;
pub type RotatingStateF32 = geometry::RotatingState<f32>;
pub type BranchF64 = vstates::Branch<f64>;
