//! Computational workbench for harmonic analysis on the boundary of a free group.
//!
//! The free group of rank `r` acts on its Cayley tree with respect to the
//! standard generators. The boundary at infinity carries the Patterson-Sullivan
//! measure, and every complex parameter `t` gives a boundary representation on
//! locally constant functions. This crate realizes that picture exactly where
//! the arithmetic allows it (cylinder measures, Radon-Nikodym cocycles, Gram
//! matrices of indicator functions) and with controlled floating point error
//! everywhere else (spherical functions, operator averages over spheres,
//! equidistribution experiments).
//!
//! Layering, bottom up:
//! * [`word`], [`context`]: reduced words, spheres, Gromov products, rays.
//! * [`measure`]: exact cylinder and annulus measures, conformal cocycle.
//! * [`cylfn`], [`coeff`]: cylinder functions, the representation, matrix
//!   coefficients grouped by boundary strata.
//! * [`kernel`]: boundary kernels, Gram matrices, energy forms, Riesz
//!   averages, the kernel-twisted inner products.
//! * [`spectral`]: eigendecompositions, pseudo-inverses, positivity scans.
//! * [`spherical`], [`poisson`], [`rd`]: spherical function, Poisson
//!   transform, convolution norm bounds on spheres.
//! * [`experiments`]: reproducible sphere-average experiments with
//!   serializable reports.

pub mod context;
pub mod error;
pub mod sum;
pub mod word;
pub mod measure;
pub mod cylfn;
pub mod coeff;
pub mod kernel;
pub mod spectral;
pub mod spherical;
pub mod poisson;
pub mod rd;
pub mod experiments;
pub mod tolerances;

pub use context::GroupContext;
pub use cylfn::{CylinderFunction, TreeTestFunction};
pub use error::{ArborError, Result};
pub use word::ReducedWord;
