//! Core library for simulating and verifying emergent time periodicity in
//! few-qubit open quantum systems.
//!
//! The crate provides:
//! - dense complex linear algebra and state carriers ([`tensor`]),
//! - spin Hamiltonians, thermal ancillas, and spectral predictions ([`models`]),
//! - the stochastic repeated-interaction (collision) engine ([`collision`]),
//! - the GKSL master-equation engine ([`lindblad`]),
//! - dynamical-symmetry construction, certification, and search ([`symmetry`]),
//! - periodogram and amplitude-envelope analysis of trajectories ([`analysis`]),
//! - trajectory records and their CSV/JSON serialization ([`record`]).

pub mod analysis;
pub mod collision;
pub mod error;
pub mod lindblad;
pub mod models;
pub mod record;
pub mod serde_util;
pub mod symmetry;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};

/// Library version, recorded in run manifests and sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
