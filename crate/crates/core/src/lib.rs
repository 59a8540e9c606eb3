//! Lorentzian metrics in Walker coordinates: curvature, sampled holonomy
//! algebras and their classification, screen structures, and geodesics.

// Tensor code indexes several arrays with the same loop variable, and `!(a > b)`
// comparisons are deliberate so that NaN falls on the rejecting side.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constructions;
pub mod error;
pub mod expr;
pub mod holonomy;
pub mod linalg;
pub mod metric;
pub mod ode;
pub mod sampling;
pub mod structures;
pub mod transport;

pub use error::{Error, Result};
