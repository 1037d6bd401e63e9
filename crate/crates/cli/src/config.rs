//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wlsim_core::link::LinkConfig;
use wlsim_core::mmtc::MmtcConfig;

use crate::error::{CliError, Result};
use crate::experiments::lookup;

/// One WL-vs-CL comparison: user counts and the shared per-user rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub n_wl: usize,
    pub n_cl: usize,
    pub rate: f64,
}

/// A receiver in the mMTC sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmtcVariant {
    pub receiver: String,
    #[serde(default)]
    pub half_tti: bool,
}

/// Experiment-specific grids. Unset fields take the experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receivers: Option<Vec<String>>,
    /// Trials for the coding-gain moments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
    /// `(k, n, m)` eigenvalue cases.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cases: Option<Vec<[usize; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panels: Option<Vec<Panel>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antennas: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<usize>>,
    /// Multiplies the configured arrival rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<MmtcVariant>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default = "default_output")]
    pub output_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmtc: Option<MmtcConfig>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub sweep: SweepConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn is_default(s: &SweepConfig) -> bool {
    *s == SweepConfig::default()
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed: 0,
            trials: None,
            output_path: default_output(),
            link: None,
            mmtc: None,
            sweep: SweepConfig::default(),
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|source| CliError::Parse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.trials {
            self.trials = Some(t);
        }
        if let Some(d) = &o.out_dir {
            self.output_path = d.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        lookup(&self.experiment)?;
        // TOML integers are signed.
        if self.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!(
                "seed {} does not fit in 63 bits",
                self.seed
            )));
        }
        if self.trials == Some(0) {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Configured trials or the experiment default.
    pub fn trials(&self) -> Result<usize> {
        Ok(self
            .trials
            .unwrap_or(lookup(&self.experiment)?.default_trials))
    }
}
