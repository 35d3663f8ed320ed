//! Successor-feature and xi-learning agents for transfer across tasks that
//! share dynamics but differ in reward, together with benchmark
//! environments, exact tabular oracles and an experiment harness.

pub mod agents;
pub mod approx;
pub mod envs;
pub mod error;
pub mod harness;
pub mod learnfeat;
pub mod oracle;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use rng::RandomStream;
pub use types::*;
