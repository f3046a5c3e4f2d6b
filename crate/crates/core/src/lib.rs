//! Vector potentials with homogeneous boundary values on star-shaped domains.
//!
//! The central object is [`operators::CurlInverseOp`], an explicit integral right
//! inverse `R` of the curl: for a solenoidal field `g` on a bounded domain that is
//! star-shaped with respect to the closed unit ball, `v = Rg` satisfies `curl v = g`
//! and vanishes outside the domain. The kernel is generated by a smooth bump
//! ([`smoothing::Mollifier`]) and evaluated by a one-dimensional line integral
//! ([`kernels`]); volume integrals are computed in polar coordinates centred at the
//! evaluation point so that the `|x - y|^-2` singularity is absorbed by the Jacobian
//! ([`quadrature`]). The companion Bogovskii operator (a right inverse of the
//! divergence), the smoothly truncated operator `R^eps`, and an analytic
//! representation of the Jacobian of `Rg` are built from the same pieces.
//!
//! [`verify`] holds finite-difference oracles and the study drivers used by the
//! acceptance suite and the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod fields;
pub mod geometry;
pub mod kernels;
pub mod operators;
pub mod quadrature;
pub mod smoothing;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{ScalarField, Smoothness, VectorField};
pub use geometry::{RaySegments, Shape, StarDomain};
pub use kernels::{AlphaInterval, KernelEvaluation, KernelEvaluator, KernelForm};
pub use operators::{CurlInverseOp, FieldSampleGrid, GridSpec};
pub use quadrature::{QuadratureConfig, SphereRule, SphereSize};
pub use smoothing::Mollifier;

/// Points and vectors in R^3.
pub type Point = nalgebra::Vector3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrices; Jacobians are stored with entry `(k, m) = d_m v^k`.
pub type Mat3 = nalgebra::Matrix3<f64>;
