//! Quantum stochastic walk spectra as graph invariants.
//!
//! The generator of a continuous-time quantum stochastic walk on a graph,
//! written as an `n² × n²` superoperator, has a complex spectrum that is
//! invariant under relabeling and distinguishes many graphs that adjacency
//! and Laplacian spectra cannot. This crate builds those generators,
//! computes and compares their spectra, and recovers the spectrum from the
//! full counting statistics of jumps across an auxiliary edge, both
//! analytically and from simulated quantum-jump trajectories.

pub mod catalog;
pub mod counting;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod liouville;
pub mod reconstruct;
pub mod search;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};

/// Library version, embedded in every result file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
