//! Exact counting of primitive squareful quadruples summing to zero, together
//! with the analytic constants that predict the counts: quadratic exponential
//! sums and their singular series, p-adic local densities, the archimedean
//! density of the sign quadric, and the assembled leading constant.
//!
//! Everything countable is counted exactly (no sampling); everything analytic
//! carries a reported error bound and at least one independent cross-check.

pub mod archimedean;
pub mod arith;
pub mod constant;
pub mod counting;
pub mod error;
pub mod expsums;
pub mod lseries;
pub mod padic;
pub mod rational;
pub mod rng;
pub mod squareful;

pub use error::{Error, Result};
