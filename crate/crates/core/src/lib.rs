//! Random walks with local memory (RWLM).
//!
//! A walker on a weighted Cayley graph resamples the rotor at its current
//! vertex from a per-vertex Markov kernel and then steps along the new rotor.
//! This crate provides:
//!
//! * [`network`]: weighted lattices, finite Cayley graphs, wired windows and
//!   the hidden-memory multigraph expansion;
//! * [`mechanism`]: walk mechanisms and their structural checks;
//! * [`forest`]: loop erasure, Wilson's method and exact spanning-tree oracles;
//! * [`walk`]: the walk, scenery and hidden-memory engines;
//! * [`stats`]: estimators and hypothesis checks.

pub mod error;
pub mod forest;
pub mod mechanism;
pub mod network;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};

/// Absolute tolerance used for equality of conductances and probabilities.
pub const EPS: f64 = 1e-12;
