//! Bootstrap percolation on binomial random k-uniform hypergraphs.
//!
//! The crate provides three coupled infection processes over a shared
//! hypergraph instance (the reference r-neighbourhood process, an upper
//! coupling driven by queried collections of k-sets, and a staged-activation
//! lower coupling), the closed-form threshold and trajectory layer, a
//! Galton-Watson toolkit, and a Monte Carlo experiment harness.

pub mod branching;
pub mod error;
pub mod experiments;
pub mod hypergraph;
pub mod mild_process;
pub mod percolation;
pub mod query_process;
pub mod theory;

pub use error::{Error, Result};
