//! End-to-end pipeline behind the `3cp` command.

pub mod config;
pub mod pipeline;

pub use crate::config::PipelineConfig;
pub use crate::pipeline::{run, Pipeline, Stage, StageError};
