//! Robust control synthesis for an SEIR epidemic model with uncertain initial state
//! and rates, under metric temporal logic specifications.
//!
//! [`logic`] parses formulas and computes exact, interval and smooth robustness.
//! [`dynamics`] holds the discrete-time model and its Jacobians, [`reach`] the interval
//! enclosures, and [`synthesis`] the outer certification loop and its inner solver.

// index loops mirror the matrix formulas; negated comparisons also reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod dynamics;
pub mod error;
pub mod interval;
pub mod logic;
pub mod reach;
pub mod scenario;
pub mod synthesis;
pub mod trajectory;

pub use error::{Error, Result};
