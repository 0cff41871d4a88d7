//! Loss-landscape tomography: probing the geometry of training loss sublevel
//! sets by optimizing inside random, burn-in, and trained affine subspaces.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel sweep
//! execution, and the command line live in the companion `tomography` crate.
//!
//! Module map:
//! - [`numerics`]: dense matrices, seeded random streams, truncated SVD and
//!   pseudo-inverse solves.
//! - [`geometry`]: Gaussian widths, sphere projections, local angular
//!   dimension and the escape-probability bound.
//! - [`landscapes`]: quadratic wells, affine targets and exact subspace
//!   minimization.
//! - [`neural`]: a from-scratch MLP, Adam, full/subspace/masked training and
//!   the linearized (tangent) model.
//! - [`pruning`]: lottery subspaces, magnitude-pruned lottery tickets and
//!   compression accounting.
//! - [`sweep`]: success grids, threshold extraction and method comparison.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod geometry;
pub mod landscapes;
pub mod neural;
pub mod numerics;
pub mod pruning;
pub mod sweep;

pub use error::{Error, IdxError, Result};
