//! Scenario set persistence: CSV rows plus a JSON sidecar.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Scenario, UniformBoxSpec};

/// Sidecar metadata sufficient to regenerate a scenario CSV bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSetMeta {
    pub model: String,
    pub initial_box: UniformBoxSpec,
    pub disturbance_box: UniformBoxSpec,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub seed: u64,
    pub count: u64,
    pub rng: String,
}

/// Writes one row per scenario: `index,s0,s1,...`.
pub fn write_scenarios_csv(path: &Path, scenarios: &[Scenario]) -> Result<()> {
    let dim = scenarios.first().map(|s| s.state.len()).unwrap_or(0);
    let mut out = String::new();
    out.push_str("index");
    for i in 0..dim {
        out.push_str(&format!(",s{i}"));
    }
    out.push('\n');
    for s in scenarios {
        out.push_str(&format!("{}", s.index));
        for v in &s.state {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes the JSON sidecar next to a scenario CSV.
pub fn write_scenario_meta(path: &Path, meta: &ScenarioSetMeta) -> Result<()> {
    let json = serde_json::to_string_pretty(meta)?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}
