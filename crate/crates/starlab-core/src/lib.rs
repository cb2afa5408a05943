//! Numerical laboratory for expanding radiation-gas stars with
//! monatomic-gas viscosity.
//!
//! The crate builds stationary profiles, integrates the homogeneous
//! expansion factor and its perturbations, evolves Lagrangian
//! perturbations with a structure-preserving scheme and evaluates the
//! energy functionals used to judge stability.

// `!(x > 0.0)` style checks reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Stencils read neighbouring entries, so index loops stay.
#![allow(clippy::needless_range_loop)]

pub mod expansion;
pub mod functionals;
pub mod homogeneous;
pub mod lagrangian;
pub mod numerics;
pub mod ode;
pub mod profile;

pub use expansion::{Classification, ExpansionParams, ExpansionPath};
pub use homogeneous::{Fate, PhaseState, PhaseTrajectory};
pub use profile::{GridSpec, IsentropicProfile, ProfileError, ThermoProfile};
