//! Experiment runner for the `cvbattery` engine: reproduces the published
//! figures as data files, runs the engine/oracle validation suite and
//! records every check, fit and documented discrepancy in a manifest.

pub mod claims;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ExperimentId, ExperimentSpec, RawSettings};
pub use error::{LabError, LabResult};
pub use experiments::{run, Artifacts, Status};
