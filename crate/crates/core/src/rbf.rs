//! Radial-basis-function sublevel-set reachable set estimates.
//!
//! An estimate is a sum of isotropic Gaussian bumps with a threshold:
//! a state `x` belongs to the set when
//! `sum_i exp(-|x - mu_i|^2 / (2 sigma_i^2)) >= gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitReport;
use crate::sim::Scenario;

/// Smallest admissible basis width. Keeps singleton clusters away from
/// zero-width degeneracy.
pub const SIGMA_MIN: f64 = 1e-3;

/// Centers, widths, and threshold of the fitted sublevel set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfEstimate {
    centers: Vec<Vec<f64>>,
    widths: Vec<f64>,
    threshold: f64,
}

impl RbfEstimate {
    pub fn new(centers: Vec<Vec<f64>>, widths: Vec<f64>, threshold: f64) -> Result<Self> {
        if centers.is_empty() || centers.len() != widths.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: widths.len(),
            });
        }
        let dim = centers[0].len();
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: centers.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0),
            });
        }
        for &w in &widths {
            if !(w.is_finite() && w >= SIGMA_MIN) {
                return Err(Error::OutOfRange {
                    name: "sigma",
                    value: w,
                    range: "[SIGMA_MIN, inf)",
                });
            }
        }
        if !(threshold.is_finite() && 0.0 < threshold && threshold < 1.0) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: threshold,
                range: "(0, 1)",
            });
        }
        Ok(Self {
            centers,
            widths,
            threshold,
        })
    }

    pub fn basis_count(&self) -> usize {
        self.centers.len()
    }

    pub fn state_dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `sum_i exp(-|x - mu_i|^2 / (2 sigma_i^2))`.
    pub fn score(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.state_dim());
        let mut total = 0.0;
        for (center, &width) in self.centers.iter().zip(&self.widths) {
            let mut sq = 0.0;
            for (a, b) in x.iter().zip(center) {
                let d = a - b;
                sq += d * d;
            }
            total += (-sq / (2.0 * width * width)).exp();
        }
        total
    }

    /// Membership, boundary inclusive: `score(x) >= gamma`.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.score(x) >= self.threshold
    }

    /// `sqrt(sum_i sigma_i^2)`, the surrogate for the set's volume.
    pub fn volume_proxy(&self) -> f64 {
        self.widths.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Number of holdout scenarios falling outside the set.
    pub fn count_violations(&self, holdout: &[Scenario]) -> Result<u64> {
        if holdout.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let dim = self.state_dim();
        let mut count = 0;
        for s in holdout {
            if s.state.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.state.len(),
                });
            }
            if !self.contains(&s.state) {
                count += 1;
            }
        }
        Ok(count)
    }
}

/// Serialized form of an estimate together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfEstimateDocument {
    pub model: String,
    pub m: usize,
    pub gamma: f64,
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    pub fit_report: FitReport,
    pub seed: u64,
    pub data_fingerprint: String,
}

impl RbfEstimateDocument {
    pub fn new(
        model: &str,
        estimate: &RbfEstimate,
        fit_report: FitReport,
        seed: u64,
        data_fingerprint: String,
    ) -> Self {
        Self {
            model: model.to_string(),
            m: estimate.basis_count(),
            gamma: estimate.threshold(),
            centers: estimate.centers.clone(),
            widths: estimate.widths.clone(),
            fit_report,
            seed,
            data_fingerprint,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn estimate(&self) -> Result<RbfEstimate> {
        RbfEstimate::new(self.centers.clone(), self.widths.clone(), self.gamma)
    }
}

/// SHA-256 over the little-endian bytes of the training samples, prefixed by
/// their shape. Identifies the data a fit was produced from.
pub fn data_fingerprint(samples: &[Vec<f64>]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update((samples.len() as u64).to_le_bytes());
    hasher.update((samples.first().map(Vec::len).unwrap_or(0) as u64).to_le_bytes());
    for s in samples {
        for v in s {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}
