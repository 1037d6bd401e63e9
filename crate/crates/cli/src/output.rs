//! CSV tables and the metadata sidecar.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(u64::from(x))
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Render as CSV; rejects NaN and infinities.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            let mut rec = Vec::with_capacity(row.len());
            for (cell, col) in row.iter().zip(&self.header) {
                rec.push(match cell {
                    Cell::Num(x) if !x.is_finite() => {
                        return Err(CliError::NonFinite {
                            file: self.file_name(),
                            column: col.to_string(),
                        })
                    }
                    Cell::Num(x) => format!("{x}"),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.clone(),
                });
            }
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("CSV built from UTF-8 strings"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

/// Contents of `meta.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub version: String,
    pub config_sha256: String,
    pub files: Vec<FileDigest>,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Write every table plus `meta.toml` into the configured directory.
/// Returns the written paths.
pub fn write_outputs(cfg: &ExperimentConfig, tables: &[Table]) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_path;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::with_capacity(tables.len() + 1);
    let mut files = Vec::with_capacity(tables.len());
    for t in tables {
        let csv = t.to_csv()?;
        let path = dir.join(t.file_name());
        write(&path, &csv)?;
        files.push(FileDigest {
            name: t.file_name(),
            sha256: sha256_hex(csv.as_bytes()),
        });
        written.push(path);
    }
    // The hash identifies the experiment, not where it was written.
    let hashed = ExperimentConfig {
        output_path: PathBuf::new(),
        ..cfg.clone()
    };
    let meta = Metadata {
        experiment: cfg.experiment.clone(),
        seed: cfg.seed,
        trials: cfg.trials()?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(hashed.to_toml()?.as_bytes()),
        files,
    };
    let path = dir.join("meta.toml");
    write(&path, &toml::to_string(&meta)?)?;
    written.push(path);
    Ok(written)
}
