//! Fully resolved command configurations, embedded in every output file.

use std::path::PathBuf;

use advdefer::scorer::{Method, TrainConfig};
use advdefer::synthbench::{BenchmarkConfig, RegionSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Tensor {
        path: PathBuf,
        /// Cost multiplier applied through the header's `gamma_base`.
        lambda: Option<f64>,
    },
    Synthetic {
        n: usize,
        seed: u64,
        spec: RegionSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Synth {
        benchmark: BenchmarkConfig,
        out: PathBuf,
    },
    Bayes {
        tensor: PathBuf,
        /// Requested multipliers; empty means the header grid or stored costs.
        lambdas: Vec<f64>,
        out: Option<PathBuf>,
    },
    Train {
        data: DataSource,
        method: Method,
        train: TrainConfig,
        out: PathBuf,
    },
    Eval {
        data: DataSource,
        policy: PathBuf,
        out: Option<PathBuf>,
    },
    Fisher {
        b: f64,
        epsilon: f64,
        bound: f64,
        delta: Option<f64>,
        out: Option<PathBuf>,
    },
    Report {
        input: PathBuf,
        out: Option<PathBuf>,
    },
}

/// What every output file records about how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub run: RunConfig,
}

impl Provenance {
    pub fn new(run: &RunConfig) -> Self {
        Self {
            tool: "advdefer".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            run: run.clone(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        match self {
            RunConfig::Synth { benchmark, .. } => benchmark.validate()?,
            RunConfig::Train { data, train, .. } => {
                train.validate()?;
                data.validate()?;
            }
            RunConfig::Eval { data, .. } => data.validate()?,
            RunConfig::Bayes { lambdas, .. } => {
                if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return Err(CliError::Validation("lambda values must be finite and >= 0".into()));
                }
            }
            RunConfig::Fisher { .. } | RunConfig::Report { .. } => {}
        }
        Ok(())
    }
}

impl DataSource {
    fn validate(&self) -> CliResult<()> {
        match self {
            DataSource::Synthetic { n, spec, .. } => {
                spec.validate()?;
                if *n == 0 {
                    return Err(CliError::Validation("--n must be positive".into()));
                }
            }
            DataSource::Tensor { lambda: Some(l), .. } if !(l.is_finite() && *l >= 0.0) => {
                return Err(CliError::Validation(format!("lambda must be finite and >= 0, got {l}")));
            }
            DataSource::Tensor { .. } => {}
        }
        Ok(())
    }
}

/// Reads a region spec from JSON.
pub fn read_spec(path: &std::path::Path) -> CliResult<RegionSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let spec: RegionSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(path, format!("line {} column {}: {e}", e.line(), e.column())))?;
    spec.validate()?;
    Ok(spec)
}
