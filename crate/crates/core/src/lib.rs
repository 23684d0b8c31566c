//! Balanced truncation for LTI systems with nonzero initial conditions.
//!
//! The crate covers the full pipeline: dense Lyapunov/Sylvester solvers,
//! square-root balanced truncation, the initial-value aware reduction methods
//! (translation, augmentation, separate projection and the decaying-shift
//! variants), their error bounds, the shift-parameter optimization and a
//! simulation harness that checks bounds against measured errors.

// `!(x > 0.0)` is used on purpose so that NaN is rejected as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balanced;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lti;
pub mod params;
pub mod rom;
pub mod synthetic;

pub use error::{Error, Result};
pub use lti::{LtiSystem, PiecewiseConstantInput, StateSpace, TimeGrid, Trajectory};
