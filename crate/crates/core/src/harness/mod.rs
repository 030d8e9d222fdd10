//! Experiment plumbing shared by the command-line tool and the browser demo:
//! instance generation, experiment configuration and the command pipelines.

pub mod commands;
pub mod experiment;
pub mod generate;

pub use commands::{Manifest, OutDir};
pub use experiment::{CompareCell, ExperimentConfig, Matrix};
pub use generate::{generate_instance, GenParams, GridSource};
