//! Lower-bound graphs for the triangle removal lemma.
//!
//! Corner-free sets built from lattice points in balls or boxes (or from
//! 3-AP-free sets) are turned into tripartite graphs in which every edge lies
//! in exactly one triangle. The crate builds, verifies and measures these
//! graphs, and evaluates the probabilities and density curves that govern
//! their size.

pub mod additive;
pub mod cli;
pub mod error;
pub mod graphgen;
pub mod lattice;
pub mod pipeline;
pub mod probability;

pub use error::{Error, Result};
