use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("unknown experiment `{name}`; valid names: {valid}")]
    UnknownExperiment { name: String, valid: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("non-finite value in {file}, column {column}")]
    NonFinite { file: String, column: String },
    #[error(transparent)]
    Core(#[from] wlsim_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Serialize(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
