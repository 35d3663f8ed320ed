//! Experiment driver: configuration, runs, sweeps and output files.

pub mod config;
pub mod format;
pub mod nonlinearity;
pub mod plot;
pub mod run;
pub mod sweep;

pub use config::{EnvKind, FeatureMode, RunConfig, TabularConfig};
pub use format::sig9;
pub use nonlinearity::{nonlinearity_study, BucketRow, StudyConfig};
pub use plot::plot_data;
pub use run::{run, run_repetition, run_repetition_as, sample_tasks, RunRecord, TaskRow};
pub use sweep::{sweep, Grid, SweepResult};
