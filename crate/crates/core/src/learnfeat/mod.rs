//! Reward-weight fitting and feature learning from logged transitions.

pub mod features;
pub mod log;
pub mod weights;

pub use features::{build_dataset, learn_features, FeatureLearner, LearnerConfig, Sample};
pub use log::{LoggedTransition, TransitionLog};
pub use weights::{fit_weights_offline, fit_weights_online, fit_weights_sampled, OfflineFit};
