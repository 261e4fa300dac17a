//! Numerical laboratory for the cubic family `z^3 - 3a^2 z + b` and its
//! relatives: potentials and Böttcher coordinates, parameter slices with a
//! fixed escaping co-critical position, continued-fraction multiplier domains,
//! Hausdorff dimension estimates, and a finite-depth nested-disk search for
//! Cantor Julia sets of large dimension.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dimension;
pub mod error;
pub mod families;
pub mod hunt;
pub mod potential;
pub mod omega;
pub mod slice;

pub use error::{Error, Result};
pub use families::{Complex, FamilyInstance, FamilyKind};
