//! Minimum-volume RBF fitting as a nonconvex constrained program.
//!
//! The program minimizes the width objective subject to every training
//! sample scoring at least `gamma`. Centers come from k-means, widths start
//! at the per-cluster max distance scaled so the initial point is feasible,
//! and an augmented Lagrangian with a spectral projected-gradient inner
//! solver polishes from there. Widths are box-constrained to
//! `[SIGMA_MIN, inf)`.

mod kmeans;
mod solver;

pub use kmeans::kmeans_init;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rbf::{RbfEstimate, SIGMA_MIN};

/// Relative tolerance of the support-scenario decision rule: a removed
/// sample is a support scenario when the re-fitted objective or parameters
/// move more than this, relatively.
pub const SUPPORT_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Maximum admissible `gamma - score` over the training set.
    pub feasibility_tol: f64,
    /// Lower bound on widths.
    pub sigma_min: f64,
    /// Outer augmented-Lagrangian iterations.
    pub max_outer: usize,
    /// Inner projected-gradient iterations per outer step.
    pub max_inner: usize,
    /// Relative objective change that counts as settled.
    pub objective_rel_tol: f64,
    /// Seed of the k-means initialization stream.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-6,
            sigma_min: SIGMA_MIN,
            max_outer: 40,
            max_inner: 300,
            objective_rel_tol: 1e-9,
            seed: 0,
        }
    }
}

/// Outcome of a constrained fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Final width objective `sum_i sigma_i^2`.
    pub objective: f64,
    /// `max_j max(0, gamma - score(sample_j))` at the solution.
    pub constraint_violation: f64,
    /// Total inner iterations spent.
    pub iterations: u64,
    pub converged: bool,
}

/// Width part of the objective: `sum_i (quad * sigma_i^2 + lin * sigma_i)`.
/// Plain fits use `quad = 1, lin = 0`; the tube's smoothing regularizer maps
/// onto nonunit coefficients.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WidthObjective {
    pub quad: f64,
    pub lin: f64,
}

impl WidthObjective {
    pub(crate) const VOLUME: WidthObjective = WidthObjective { quad: 1.0, lin: 0.0 };
}

/// A feasible starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
}

fn check_fit_inputs(samples: &[Vec<f64>], m: usize, threshold: f64) -> Result<usize> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if m == 0 || m > samples.len() {
        return Err(Error::TooManyBasisFunctions {
            basis_count: m,
            samples: samples.len(),
        });
    }
    if !(threshold.is_finite() && 0.0 < threshold && threshold < 1.0) {
        return Err(Error::OutOfRange {
            name: "gamma",
            value: threshold,
            range: "(0, 1)",
        });
    }
    let dim = samples[0].len();
    if dim == 0 || samples.iter().any(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: samples
                .iter()
                .map(Vec::len)
                .find(|&l| l != dim)
                .unwrap_or(0),
        });
    }
    Ok(dim)
}

/// k-means centers with widths set to (per-cluster max distance to the
/// center) / sqrt(2 ln(1/gamma)), which covers every sample through its own
/// cluster's basis alone.
pub fn feasible_initialization(
    samples: &[Vec<f64>],
    m: usize,
    threshold: f64,
    opts: &FitOptions,
) -> Result<Initialization> {
    check_fit_inputs(samples, m, threshold)?;
    let centers = kmeans::kmeans_init(samples, m, opts.seed)?;
    let assignment = kmeans::assign(samples, &centers);
    let scale = (2.0 * threshold.recip().ln()).sqrt();
    let mut widths = vec![opts.sigma_min; m];
    for (s, &a) in samples.iter().zip(&assignment) {
        let d = s
            .iter()
            .zip(&centers[a])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        widths[a] = widths[a].max(d / scale);
    }
    Ok(Initialization { centers, widths })
}

/// Fits the minimum-volume estimate containing all samples.
pub fn fit_rbf(
    samples: &[Vec<f64>],
    m: usize,
    threshold: f64,
    opts: &FitOptions,
) -> Result<(RbfEstimate, FitReport)> {
    let init = feasible_initialization(samples, m, threshold, opts)?;
    fit_with_objective(samples, threshold, opts, WidthObjective::VOLUME, &init)
}

/// Fit with a caller-supplied width objective and starting point; shared by
/// plain fits, leave-one-out refits, and tube slices.
pub(crate) fn fit_with_objective(
    samples: &[Vec<f64>],
    threshold: f64,
    opts: &FitOptions,
    width_objective: WidthObjective,
    init: &Initialization,
) -> Result<(RbfEstimate, FitReport)> {
    let dim = check_fit_inputs(samples, init.centers.len(), threshold)?;
    debug_assert_eq!(init.centers[0].len(), dim);
    solver::solve(samples, threshold, opts, width_objective, init)
}

/// Counts scenarios whose removal changes the fitted solution by re-solving
/// the program without each sample in turn, always from the initialization
/// computed on the full dataset: `N + 1` full fits, by construction.
///
/// The decision rule compares the re-fitted objective and parameters against
/// the full-data solution at [`SUPPORT_REL_TOL`]. A parameter move alone only
/// counts when the objective also changed beyond solver noise; otherwise it
/// is a wander along a flat direction of an unchanged optimum.
pub fn count_support_scenarios(
    samples: &[Vec<f64>],
    m: usize,
    threshold: f64,
    opts: &FitOptions,
) -> Result<u64> {
    check_fit_inputs(samples, m, threshold)?;
    if samples.len() == 1 {
        // Removing the only sample leaves a degenerate program.
        return Ok(1);
    }

    let init = feasible_initialization(samples, m, threshold, opts)?;
    let (base_est, base_report) =
        fit_with_objective(samples, threshold, opts, WidthObjective::VOLUME, &init)?;
    let base_params = flatten_params(&base_est);
    let base_norm = l2_norm(&base_params).max(1e-12);
    let base_obj = base_report.objective.abs().max(1e-12);
    let noise_floor = SUPPORT_REL_TOL * 0.1;

    let mut support = 0u64;
    let mut reduced: Vec<Vec<f64>> = Vec::with_capacity(samples.len() - 1);
    for index in 0..samples.len() {
        reduced.clear();
        reduced.extend_from_slice(&samples[..index]);
        reduced.extend_from_slice(&samples[index + 1..]);
        if reduced.len() < m {
            support += 1;
            continue;
        }
        let (est, report) =
            fit_with_objective(&reduced, threshold, opts, WidthObjective::VOLUME, &init)
                .map_err(|e| Error::SupportRefit {
                    index,
                    source: Box::new(e),
                })?;
        let rel_obj = (report.objective - base_report.objective).abs() / base_obj;
        let params = flatten_params(&est);
        let rel_move = l2_dist(&params, &base_params) / base_norm;
        if rel_obj > SUPPORT_REL_TOL || (rel_move > SUPPORT_REL_TOL && rel_obj > noise_floor) {
            support += 1;
        }
    }
    Ok(support)
}

fn flatten_params(est: &RbfEstimate) -> Vec<f64> {
    let mut out = Vec::with_capacity(est.basis_count() * (est.state_dim() + 1));
    for c in est.centers() {
        out.extend_from_slice(c);
    }
    out.extend_from_slice(est.widths());
    out
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
