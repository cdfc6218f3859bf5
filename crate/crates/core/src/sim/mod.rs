//! System models, fixed-step integration, and seeded scenario generation.

mod integrate;
mod io;
mod models;
mod sample;

pub use integrate::{integrate, integrate_on_grid, integrate_terminal};
pub use io::{write_scenario_meta, write_scenarios_csv, ScenarioSetMeta};
pub use models::{builtin_model, linear2d_transition, ModelSetup, SystemModel};
pub use sample::{sample_scenarios, sample_trajectories};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default integrator step, in model time units.
pub const DEFAULT_STEP: f64 = 1e-2;

/// Axis-aligned box with independent uniform marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBoxSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl UniformBoxSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidBox {
                    index: i,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// Zero-dimensional box, for systems without disturbances.
    pub fn empty() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

/// A sampled terminal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub state: Vec<f64>,
    /// Index of the per-sample random stream that produced this scenario.
    pub index: u64,
}

/// A state path on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::GridMismatch);
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::GridMismatch);
        }
        let dim = states[0].len();
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: states.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
            });
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state_at(&self, instant: usize) -> &[f64] {
        &self.states[instant]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is non-empty")
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn num_instants(&self) -> usize {
        self.times.len()
    }
}

/// `count` evenly spaced instants covering `[t0, t1]` inclusively.
pub fn uniform_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && t1 > t0, "grid needs at least two instants");
    let dt = (t1 - t0) / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| t0 + i as f64 * dt).collect();
    grid[count - 1] = t1;
    grid
}
