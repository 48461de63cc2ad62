//! Benchmark harness for comparing quantum-annealer samplers against
//! classical heuristics on Ising and QUBO instances.
//!
//! The crate covers the whole pipeline: instance generation on hardware
//! style graphs, minor embedding, classical solvers with work accounting,
//! an annealer access-time model with a mock sampler, budgeted suite
//! execution and rank-based analysis of the results.
// Parameter checks use `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedding;
pub mod error;
pub mod generators;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod qpu;
pub mod seed;
pub mod solvers;
pub mod topology;

pub use error::{Error, Result};
pub use model::{Assignment, Bqm, Vartype};
pub use topology::HardwareGraph;
