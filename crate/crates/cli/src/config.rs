//! Run configuration: a JSON file supplies defaults, command-line flags override it.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use thermoscale::resetsim::QubitNoise;
use thermoscale::states::{DenseCap, DENSE_CAP_ENV};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub dense_cap: Option<usize>,
    pub scaling_curve: ScalingCurveSection,
    pub fit: FitSection,
    pub reset_sim: ResetSection,
    pub verify: VerifySection,
    pub bound_audit: AuditSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingCurveSection {
    pub x: Option<f64>,
    pub eta: Option<f64>,
    pub n_min: Option<u64>,
    pub n_max: Option<u64>,
    pub log_grid: Option<bool>,
    pub points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub csv: Option<PathBuf>,
    pub frequency_ghz: Option<Vec<f64>>,
    pub weighted: Option<bool>,
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResetSection {
    pub preset: Option<String>,
    pub n_qubits: Option<usize>,
    pub rounds: Option<usize>,
    pub p_readout: Option<f64>,
    pub p_gate: Option<f64>,
    pub delay_us: Option<f64>,
    pub t1_us: Option<f64>,
    pub x_env: Option<f64>,
    pub p_init: Option<f64>,
    pub per_qubit: Option<Vec<QubitNoise>>,
    pub shots: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub suite: Option<String>,
    pub instances: Option<usize>,
    pub strict: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub family: Option<String>,
    pub instances: Option<usize>,
    pub x: Option<f64>,
    pub n: Option<usize>,
    pub strict: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
    }
}

/// Global settings after merging flags, environment and config file.
#[derive(Clone, Debug, Serialize)]
pub struct Globals {
    pub seed: u64,
    pub format: Format,
    pub dense_cap: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Globals {
    /// Precedence: flag, then `THERMOSCALE_DENSE_CAP` (dense cap only), then the
    /// config file, then built-in defaults.
    pub fn resolve(
        seed: Option<u64>,
        out: Option<PathBuf>,
        format: Option<Format>,
        dense_cap: Option<usize>,
        file: &FileConfig,
    ) -> Result<Self, CliError> {
        let env_cap = match std::env::var(DENSE_CAP_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Input(format!("{DENSE_CAP_ENV}={v:?} is not a qubit count")))?,
            ),
            Err(_) => None,
        };
        let cap = dense_cap.or(env_cap).or(file.dense_cap).unwrap_or(DenseCap::DEFAULT.0);
        DenseCap::new(cap)?;
        Ok(Self {
            seed: seed.or(file.seed).unwrap_or(0),
            format: format.or(file.format).unwrap_or_default(),
            dense_cap: cap,
            out: out.or_else(|| file.out.clone()),
        })
    }

    pub fn cap(&self) -> DenseCap {
        DenseCap(self.dense_cap)
    }
}
