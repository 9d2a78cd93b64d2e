//! Recursively adaptive quantum state tomography.
//!
//! The crate is organised bottom-up:
//!
//! - [`quantum`]: dense complex matrices, the normalized Pauli operator basis,
//!   Bloch-vector parameterization, fidelity-family metrics and the projection
//!   of unphysical estimates onto the set of density matrices.
//! - [`measurements`]: POVMs used by the protocols (cube settings, mutually
//!   unbiased bases, product-POVM completion, eigenbasis measurements).
//! - [`estimator`]: weighted linear-regression estimation, both as a batch
//!   solve and as a recursive rank-one update.
//! - [`adaptive`]: the gain criterion, the minimum-probability product
//!   projector search, candidate sets and resource scheduling.
//! - [`simulator`]: seeded Born-rule sampling, random states and end-to-end
//!   protocol runs with Monte Carlo aggregation.
//! - [`reporting`]: Gill-Massar bound, improvement index and result files.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod error;
pub mod estimator;
pub mod measurements;
pub mod quantum;
pub mod reporting;
pub mod simulator;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
