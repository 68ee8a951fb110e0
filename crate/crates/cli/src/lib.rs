//! Staged command-line pipeline over `fairrep-core`: prepare, train-embed,
//! debias and evaluate, each persisting its artifacts with provenance.

pub mod config;
pub mod error;
pub mod manifest;
pub mod provenance;
pub mod stages;

pub use config::PipelineConfig;
pub use error::{CliError, ErrorKind};
pub use manifest::{pipeline, verify_manifest, RunManifest};
