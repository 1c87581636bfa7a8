//! Pipeline, file formats and reproduction report on top of
//! `nanorbit-core`.

pub mod cache;
pub mod config;
mod error;
pub mod output;
pub mod pipeline;
pub mod report;

pub use config::Config;
pub use error::PipelineError;
pub use pipeline::{run_pipeline, Pipeline, Request, Run, RunManifest, Stage};
pub use report::{reproduce, Report};
