//! CSV tables and JSON run manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! is byte-identical across runs whenever the values are. Wall-clock columns
//! are the one deliberate exception.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::RNG_IDENTITY;

use super::runs::{CoverageSummary, DerandRow, RowFailure, WaitAndJudgeRow};
use super::ResultRow;

/// Everything needed to re-run a command bit-identically: the full config,
/// the seed, the RNG identity, and the code version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub failures: Vec<RowFailure>,
    /// Headline numbers of the run (epsilon, miscoverage, ...).
    pub summary: serde_json::Value,
    pub runtime_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_IDENTITY.to_string(),
            seed,
            config,
            outputs: Vec::new(),
            failures: Vec::new(),
            summary: serde_json::Value::Null,
            runtime_s: 0.0,
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(manifest)?)
}

/// `N,M,vol,k_hat,e_hat,epsilon,runtime_s,seed` rows.
pub fn write_sweep_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut out = String::from("N,M,vol,k_hat,e_hat,epsilon,runtime_s,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n, r.m, r.volume, r.violations, r.empirical_error, r.epsilon, r.runtime_s, r.seed
        ));
    }
    write_text(path, &out)
}

/// `N,support_count,vol,epsilon,runtime_s,seed` row.
pub fn write_wnj_csv(path: &Path, row: &WaitAndJudgeRow) -> Result<()> {
    let out = format!(
        "N,support_count,vol,epsilon,runtime_s,seed\n{},{},{},{},{},{}\n",
        row.n, row.support_count, row.volume, row.epsilon, row.runtime_s, row.seed
    );
    write_text(path, &out)
}

/// Per-trial `trial,k_hat,epsilon,true_error,miscovered` rows.
pub fn write_coverage_csv(path: &Path, summary: &CoverageSummary) -> Result<()> {
    let mut out = String::from("trial,k_hat,epsilon,true_error,miscovered\n");
    for r in &summary.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial, r.violations, r.epsilon, r.true_error, r.miscovered
        ));
    }
    write_text(path, &out)
}

/// `d,epsilon,delta_star,exact_p,mc_estimate,query_bound` rows.
pub fn write_derand_csv(path: &Path, rows: &[DerandRow]) -> Result<()> {
    let mut out = String::from("d,epsilon,delta_star,exact_p,mc_estimate,query_bound\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.dimension, r.epsilon, r.delta_star, r.exact_probability, r.mc_estimate, r.query_bound
        ));
    }
    write_text(path, &out)
}
