//! Discrete oscillation spaces on dyadic grids.
//!
//! The crate computes Muckenhoupt and reverse Hölder constants of weights,
//! maximal functions and the Rubio de Francia iteration, weighted
//! oscillation norms over finite base families, and per-instance
//! certificates that check the Hölder/Jensen chains relating those norms.

pub mod digest;
pub mod error;
pub mod lattice;
pub mod operators;
pub mod oscillation;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};

/// Toolkit version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
