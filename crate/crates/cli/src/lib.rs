//! Command-line front end of `floqdyn-core`: strict TOML run configs, named
//! presets, deterministic parallel runs and CSV datasets with JSON metadata.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{load, parse_config, Overrides, RunConfig, Workflow};
pub use error::{CliError, Result};
pub use run::{compute, execute, resolve_threads, Dataset, Report};
