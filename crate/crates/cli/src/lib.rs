//! Experiment runner: TOML configs in, CSV tables and a `meta.toml` sidecar
//! out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, Result};
pub use experiments::{lookup, run, REGISTRY};
pub use output::{write_outputs, Table};

/// Load, override, run and write. Returns the written paths.
pub fn run_file(path: &std::path::Path, overrides: &Overrides) -> Result<Vec<std::path::PathBuf>> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(overrides);
    cfg.validate()?;
    let tables = run(&cfg)?;
    write_outputs(&cfg, &tables)
}
