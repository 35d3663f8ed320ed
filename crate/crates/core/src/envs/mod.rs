//! Benchmark environments and task samplers.

pub mod object;
pub mod racer;
pub mod rbf;
pub mod tabular;
pub mod tasks;

pub use object::{ObjectCollectionEnv, Variant};
pub use racer::RacerEnv;
pub use rbf::{rbf_encode_orientation, rbf_encode_position, torus_distance, Metric};
pub use tabular::{Outcome, TabularEnv, TabularGridworld, TabularModel};
pub use tasks::{sample_task, sample_task_at_nonlinearity, RewardKind};
pub use crate::types::GaussianComponent;
