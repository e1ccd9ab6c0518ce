//! Coordinated multi-neighborhood learning of local causal structure.
//!
//! The crate learns the structure around several target nodes of a DAG at
//! once: Markov blankets give each target a neighborhood, a two-phase skeleton
//! search keeps between-neighborhood edges alive, and FCI orientation rules
//! propagate orientations across neighborhoods. Single-neighborhood and global
//! PC baselines, a Gaussian linear SEM simulator, scoring metrics and a
//! cross-validation harness sit alongside.

pub mod ci;
pub mod cveval;
pub mod discovery;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod mb;
pub mod metrics;
pub mod simgen;
pub(crate) mod subsets;

pub use error::{Error, Result};
pub use graph::{Dag, Mark, MixedGraph, TargetSpec};
