//! Discrete-event simulation of idealized quantum experiments on causal
//! DAGs, under four locally causal and deterministic interpretation engines:
//! a local-realist hidden-variable model (which provably fails), a
//! superdeterministic model with a common initial node, the parallel-lives
//! branching model, and the combination of the last two. Every engine's
//! predictions are checked against an exact state-vector oracle.

pub mod contextuality;
pub mod engine;
pub mod error;
pub mod graph;
pub mod lives;
pub mod models;
pub mod oracle;

pub use error::{Error, Result};
