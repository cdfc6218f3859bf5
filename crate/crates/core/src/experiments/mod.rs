//! Declarative experiment configs, result rows, and run manifests.

mod output;
mod runs;

pub use output::{
    write_coverage_csv, write_derand_csv, write_manifest, write_sweep_csv, write_wnj_csv,
    RunManifest,
};
pub use runs::{
    run_coverage_study, run_derand_demo, run_split_sweep, run_tube_experiment,
    run_wait_and_judge, CoverageConfig, CoverageSummary, CoverageTrialRow, DerandRow,
    RowFailure, SweepOutcome, TubeOutcome, WaitAndJudgeRow,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::builtin_model;

/// Reach tube settings: grid resolution and smoothing weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeConfig {
    pub instants: usize,
    pub lambda: f64,
}

/// One experiment description; the JSON config file mirrors this struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: String,
    pub basis_count: usize,
    pub rbf_threshold: f64,
    pub confidence: f64,
    pub total_samples: u64,
    /// `(N, M)` training/holdout pairs, each summing to `total_samples`.
    pub splits: Vec<(u64, u64)>,
    pub seed: u64,
    pub integrator_step: f64,
    pub tube: TubeConfig,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reference configuration for a built-in model.
    pub fn for_model(model: &str) -> Result<Self> {
        let (basis_count, splits): (usize, Vec<(u64, u64)>) = match model {
            "duffing" => (2, STANDARD_SPLITS.to_vec()),
            "quadrotor" => (3, STANDARD_SPLITS.to_vec()),
            "linear2d" => (1, vec![(1500, 1500)]),
            other => return Err(Error::UnknownModel(other.to_string())),
        };
        Ok(Self {
            model: model.to_string(),
            basis_count,
            rbf_threshold: 0.25,
            confidence: 1e-9,
            total_samples: 3000,
            splits,
            seed: 42,
            integrator_step: crate::sim::DEFAULT_STEP,
            tube: TubeConfig {
                instants: 41,
                lambda: 1.0,
            },
            out_dir: PathBuf::from("out"),
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        builtin_model(&self.model)?;
        if self.basis_count == 0 {
            return Err(Error::InvalidConfig("basis_count must be at least 1".into()));
        }
        if !(self.rbf_threshold.is_finite()
            && 0.0 < self.rbf_threshold
            && self.rbf_threshold < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "rbf_threshold {} outside (0, 1)",
                self.rbf_threshold
            )));
        }
        if !(self.confidence.is_finite() && 0.0 < self.confidence && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        if !(self.integrator_step.is_finite() && self.integrator_step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "integrator_step {} must be positive",
                self.integrator_step
            )));
        }
        if self.splits.is_empty() {
            return Err(Error::InvalidConfig("splits must be non-empty".into()));
        }
        for &(n, m) in &self.splits {
            if n == 0 || m == 0 {
                return Err(Error::InvalidConfig(format!(
                    "split ({n}, {m}) needs N >= 1 and M >= 1"
                )));
            }
            if n + m != self.total_samples {
                return Err(Error::InvalidConfig(format!(
                    "split ({n}, {m}) does not sum to total_samples {}",
                    self.total_samples
                )));
            }
            if (self.basis_count as u64) > n {
                return Err(Error::InvalidConfig(format!(
                    "basis_count {} exceeds training size {n}",
                    self.basis_count
                )));
            }
        }
        if self.tube.instants < 2 {
            return Err(Error::InvalidConfig("tube.instants must be at least 2".into()));
        }
        if !(self.tube.lambda.is_finite() && self.tube.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tube.lambda {} must be non-negative",
                self.tube.lambda
            )));
        }
        Ok(())
    }
}

/// The nine training/holdout splits of the reference tables.
pub const STANDARD_SPLITS: [(u64, u64); 9] = [
    (10, 2990),
    (50, 2950),
    (100, 2900),
    (1000, 2000),
    (1500, 1500),
    (2000, 1000),
    (2900, 100),
    (2950, 50),
    (2990, 10),
];

/// One line of a split-sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: u64,
    pub m: u64,
    pub volume: f64,
    pub violations: u64,
    pub empirical_error: f64,
    pub epsilon: f64,
    pub runtime_s: f64,
    pub seed: u64,
}
