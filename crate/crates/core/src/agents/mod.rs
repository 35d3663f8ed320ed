//! Learning agents, Q reconstruction from successor representations, and
//! GPI over the per-task policy library.

pub mod agent;
pub mod cxi;
pub mod library;
pub mod model;
pub mod reward;

pub use agent::{Agent, AgentConfig, AgentKind, ApproxSpec, FeatureSource, PrefitSpec, RewardMode};
pub use cxi::{bin_centers, cxi_encode, cxi_encode_into, BINS, DELTA};
pub use library::{gpi_select, q_from_xi, LibraryEntry, PolicyLibrary};
pub use model::FeatureModel;
pub use reward::{OutputLayout, RewardModel};
