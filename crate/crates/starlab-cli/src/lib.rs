//! Experiment runner for the starlab solvers: configuration, scenarios,
//! output artifacts and the acceptance suite.

// `!(x > 0.0)` style checks reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod scenarios;
pub mod svg;
pub mod verify;
