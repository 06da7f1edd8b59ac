//! Control-variate estimation of an expensive target metric from cheap,
//! correlated surrogate measurements.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod mcf;
pub mod report;
pub mod synthetic;

pub use error::{Error, Result};
