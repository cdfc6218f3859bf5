//! Time-varying RBF reach tubes with width smoothing across instants.
//!
//! A tube is one RBF estimate per grid instant. Fitting minimizes
//! `sum_tau sum_i [sigma_i(tau)^2 + lambda (sigma_avg - sigma_i(tau))^2]`
//! subject to per-instant containment of every training trajectory, where
//! `sigma_avg` is the mean width over all `(i, tau)`. The coupled program is
//! solved by block-coordinate sweeps over instants: each sweep freezes
//! `sigma_avg`, which turns the instant subproblems into plain constrained
//! fits with a shifted quadratic width objective.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{self, FitOptions, FitReport, Initialization, WidthObjective};
use crate::rbf::RbfEstimate;
use crate::seeds;
use crate::sim::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeOptions {
    /// Weight of the width-smoothing regularizer.
    pub lambda: f64,
    /// Per-instant constrained fit settings.
    pub fit: FitOptions,
    /// Block-coordinate sweeps over the grid.
    pub max_sweeps: usize,
    /// Relative objective change that stops the sweeps.
    pub sweep_rel_tol: f64,
}

impl Default for TubeOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            fit: FitOptions::default(),
            max_sweeps: 25,
            sweep_rel_tol: 1e-6,
        }
    }
}

/// Fit metadata for a tube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeFitReport {
    pub objective: f64,
    pub sweeps: usize,
    pub constraint_violation: f64,
    pub converged: bool,
}

/// Per-instant RBF parameters over a shared time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeEstimate {
    times: Vec<f64>,
    slices: Vec<RbfEstimate>,
    lambda: f64,
    fit_report: TubeFitReport,
}

impl TubeEstimate {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[RbfEstimate] {
        &self.slices
    }

    pub fn slice(&self, instant: usize) -> &RbfEstimate {
        &self.slices[instant]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn threshold(&self) -> f64 {
        self.slices[0].threshold()
    }

    pub fn basis_count(&self) -> usize {
        self.slices[0].basis_count()
    }

    pub fn num_instants(&self) -> usize {
        self.times.len()
    }

    pub fn fit_report(&self) -> TubeFitReport {
        self.fit_report
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    fn check_grid(&self, traj: &Trajectory) -> Result<()> {
        if traj.times() != self.times.as_slice() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Mean width over all `(basis, instant)` pairs.
fn average_width(widths: impl Iterator<Item = f64>, count: usize) -> f64 {
    widths.sum::<f64>() / count as f64
}

/// `sum_tau sum_i [sigma^2 + lambda (sigma_avg - sigma)^2]` with `sigma_avg`
/// the mean width of the evaluated tube.
pub fn tube_objective(tube: &TubeEstimate) -> f64 {
    let total = tube.slices.len() * tube.basis_count();
    let avg = average_width(
        tube.slices.iter().flat_map(|s| s.widths().iter().copied()),
        total,
    );
    tube.slices
        .iter()
        .flat_map(|s| s.widths().iter())
        .map(|&w| w * w + tube.lambda * (avg - w) * (avg - w))
        .sum()
}

fn collect_instant_points(trajectories: &[Trajectory], instant: usize) -> Vec<Vec<f64>> {
    trajectories
        .iter()
        .map(|t| t.state_at(instant).to_vec())
        .collect()
}

/// Fits a tube to trajectories sharing one grid.
pub fn fit_tube(
    trajectories: &[Trajectory],
    m: usize,
    threshold: f64,
    opts: &TubeOptions,
) -> Result<TubeEstimate> {
    if trajectories.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if !(opts.lambda.is_finite() && opts.lambda >= 0.0) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: opts.lambda,
            range: "[0, inf)",
        });
    }
    let times = trajectories[0].times().to_vec();
    for t in trajectories {
        if t.times() != times.as_slice() {
            return Err(Error::GridMismatch);
        }
    }
    let instants = times.len();

    // Per-instant feasible starts; seeds derive from the instant index so
    // results do not depend on sweep order.
    let mut inits: Vec<Initialization> = Vec::with_capacity(instants);
    let mut points: Vec<Vec<Vec<f64>>> = Vec::with_capacity(instants);
    for tau in 0..instants {
        let pts = collect_instant_points(trajectories, tau);
        let fit_opts = FitOptions {
            seed: seeds::derive_seed(opts.fit.seed, seeds::labels::TUBE_KMEANS, tau as u64),
            ..opts.fit
        };
        inits.push(fit::feasible_initialization(&pts, m, threshold, &fit_opts)?);
        points.push(pts);
    }

    let mut widths: Vec<Vec<f64>> = inits.iter().map(|i| i.widths.clone()).collect();
    let mut current: Vec<Initialization> = inits;
    let mut reports: Vec<FitReport> = Vec::new();
    let total_widths = instants * m;
    let mut objective_prev = f64::INFINITY;
    let mut sweeps = 0usize;
    let mut converged = false;

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let avg = average_width(
            widths.iter().flat_map(|w| w.iter().copied()),
            total_widths,
        );
        // sigma^2 + lambda (avg - sigma)^2 expands to
        // (1 + lambda) sigma^2 - 2 lambda avg sigma + const.
        let wobj = WidthObjective {
            quad: 1.0 + opts.lambda,
            lin: -2.0 * opts.lambda * avg,
        };

        reports.clear();
        for tau in 0..instants {
            let (est, report) =
                fit::fit_with_objective(&points[tau], threshold, &opts.fit, wobj, &current[tau])
                    .map_err(|e| tube_error(e, tau, times[tau]))?;
            widths[tau].copy_from_slice(est.widths());
            current[tau] = Initialization {
                centers: est.centers().to_vec(),
                widths: est.widths().to_vec(),
            };
            reports.push(report);
        }

        let objective = coupled_objective(&widths, opts.lambda, total_widths);
        if (objective_prev - objective).abs() <= opts.sweep_rel_tol * objective.abs().max(1e-12) {
            converged = true;
            objective_prev = objective;
            break;
        }
        objective_prev = objective;
    }

    let worst_violation = reports
        .iter()
        .map(|r| r.constraint_violation)
        .fold(0.0f64, f64::max);
    let slices: Vec<RbfEstimate> = current
        .iter()
        .map(|init| RbfEstimate::new(init.centers.clone(), init.widths.clone(), threshold))
        .collect::<Result<_>>()?;

    Ok(TubeEstimate {
        times,
        slices,
        lambda: opts.lambda,
        fit_report: TubeFitReport {
            objective: objective_prev,
            sweeps,
            constraint_violation: worst_violation,
            converged,
        },
    })
}

fn coupled_objective(widths: &[Vec<f64>], lambda: f64, total: usize) -> f64 {
    let avg = average_width(widths.iter().flat_map(|w| w.iter().copied()), total);
    widths
        .iter()
        .flat_map(|w| w.iter())
        .map(|&w| w * w + lambda * (avg - w) * (avg - w))
        .sum()
}

fn tube_error(err: Error, instant: usize, time: f64) -> Error {
    match err {
        Error::InfeasibleFit { report } => Error::InfeasibleTubeFit {
            instant,
            time,
            report,
        },
        other => other,
    }
}

/// Whole-trajectory membership: contained at every instant.
pub fn tube_contains(tube: &TubeEstimate, traj: &Trajectory) -> Result<bool> {
    tube.check_grid(traj)?;
    for (slice, state) in tube.slices.iter().zip(traj.states()) {
        if !slice.contains(state) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of trajectories that leave the tube at some instant.
pub fn tube_violations(tube: &TubeEstimate, trajectories: &[Trajectory]) -> Result<u64> {
    let mut count = 0;
    for t in trajectories {
        if !tube_contains(tube, t)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Per-instant violation counts, for plotting where trajectories escape.
pub fn per_instant_violations(
    tube: &TubeEstimate,
    trajectories: &[Trajectory],
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; tube.num_instants()];
    for t in trajectories {
        tube.check_grid(t)?;
        for (tau, (slice, state)) in tube.slices.iter().zip(t.states()).enumerate() {
            if !slice.contains(state) {
                counts[tau] += 1;
            }
        }
    }
    Ok(counts)
}

/// Writes `tau,violations` rows.
pub fn write_instant_violations_csv(path: &Path, times: &[f64], counts: &[u64]) -> Result<()> {
    let mut out = String::from("tau,violations\n");
    for (t, c) in times.iter().zip(counts) {
        out.push_str(&format!("{t},{c}\n"));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbf::SIGMA_MIN;
    use crate::sim::{builtin_model, sample_trajectories, uniform_grid};

    fn toy_tube(widths: &[Vec<f64>], lambda: f64) -> TubeEstimate {
        let times: Vec<f64> = (0..widths.len()).map(|i| i as f64).collect();
        let slices = widths
            .iter()
            .map(|w| {
                let centers = vec![vec![0.0, 0.0]; w.len()];
                RbfEstimate::new(centers, w.clone(), 0.25).unwrap()
            })
            .collect();
        TubeEstimate {
            times,
            slices,
            lambda,
            fit_report: TubeFitReport {
                objective: 0.0,
                sweeps: 0,
                constraint_violation: 0.0,
                converged: true,
            },
        }
    }

    #[test]
    fn objective_reduces_to_width_sum_at_lambda_zero() {
        let tube = toy_tube(&[vec![1.0, 2.0], vec![0.5, 3.0]], 0.0);
        let want: f64 = [1.0f64, 2.0, 0.5, 3.0].iter().map(|w| w * w).sum();
        assert_eq!(tube_objective(&tube), want);
    }

    #[test]
    fn equal_widths_zero_out_the_regularizer() {
        let tube = toy_tube(&[vec![0.7, 0.7], vec![0.7, 0.7]], 5.0);
        assert!((tube_objective(&tube) - 4.0 * 0.49).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_two_instant_objective() {
        // widths (1, 3), lambda = 1: avg = 2, objective = 1 + 9 + 1 + 1 = 12.
        let tube = toy_tube(&[vec![1.0], vec![3.0]], 1.0);
        assert!((tube_objective(&tube) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn regularizer_is_nonnegative() {
        let widths = vec![vec![0.3, 1.7], vec![2.0, 0.9], vec![1.1, 1.3]];
        let at_zero = tube_objective(&toy_tube(&widths, 0.0));
        for &lambda in &[0.1, 1.0, 10.0] {
            assert!(tube_objective(&toy_tube(&widths, lambda)) >= at_zero);
        }
    }

    #[test]
    fn single_trajectory_traces_centers_at_minimal_width() {
        let setup = builtin_model("linear2d").unwrap();
        let grid = uniform_grid(0.0, 10.0, 11);
        let trajs = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            1,
            &grid,
            1e-2,
            3,
        )
        .unwrap();
        let tube = fit_tube(&trajs, 1, 0.25, &TubeOptions::default()).unwrap();
        for (slice, state) in tube.slices().iter().zip(trajs[0].states()) {
            assert_eq!(slice.widths()[0], SIGMA_MIN);
            let d: f64 = slice.centers()[0]
                .iter()
                .zip(state)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(d < 1e-9, "center strayed {d} from the trajectory");
        }
        assert!(tube_contains(&tube, &trajs[0]).unwrap());
    }

    #[test]
    fn lambda_zero_decouples_into_per_instant_fits() {
        let setup = builtin_model("linear2d").unwrap();
        let grid = uniform_grid(0.0, 10.0, 9);
        let trajs = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            60,
            &grid,
            1e-2,
            11,
        )
        .unwrap();
        let opts = TubeOptions {
            lambda: 0.0,
            ..TubeOptions::default()
        };
        let tube = fit_tube(&trajs, 1, 0.25, &opts).unwrap();

        let mut separate = 0.0;
        for tau in 0..grid.len() {
            let pts = collect_instant_points(&trajs, tau);
            let fit_opts = FitOptions {
                seed: seeds::derive_seed(0, seeds::labels::TUBE_KMEANS, tau as u64),
                ..FitOptions::default()
            };
            let (_, report) = fit::fit_rbf(&pts, 1, 0.25, &fit_opts).unwrap();
            separate += report.objective;
        }
        let coupled = tube_objective(&tube);
        assert!(
            (coupled - separate).abs() <= 1e-4 * separate.max(1e-12),
            "coupled {coupled} vs separate {separate}"
        );
    }

    #[test]
    fn fitted_tube_is_feasible_and_centers_stay_in_cloud() {
        let setup = builtin_model("linear2d").unwrap();
        let grid = uniform_grid(0.0, 10.0, 9);
        let trajs = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            80,
            &grid,
            1e-2,
            21,
        )
        .unwrap();
        let tube = fit_tube(&trajs, 1, 0.25, &TubeOptions::default()).unwrap();
        assert!(tube.fit_report().constraint_violation <= 1e-6);

        for tau in 0..grid.len() {
            // Per-instant feasibility.
            for t in &trajs {
                assert!(
                    tube.slice(tau).score(t.state_at(tau)) >= 0.25 - 1e-6,
                    "instant {tau} infeasible"
                );
            }
            // Center within the instant's bounding box.
            let pts = collect_instant_points(&trajs, tau);
            for k in 0..2 {
                let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                let c = tube.slice(tau).centers()[0][k];
                assert!(c >= lo - 1e-9 && c <= hi + 1e-9, "center outside cloud");
            }
        }

        // Training trajectories are all contained.
        assert_eq!(tube_violations(&tube, &trajs).unwrap(), 0);
    }

    #[test]
    fn single_instant_violation_fails_membership() {
        let setup = builtin_model("linear2d").unwrap();
        let grid = uniform_grid(0.0, 10.0, 5);
        let trajs = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            30,
            &grid,
            1e-2,
            7,
        )
        .unwrap();
        let tube = fit_tube(&trajs, 1, 0.25, &TubeOptions::default()).unwrap();

        let mut states: Vec<Vec<f64>> = trajs[0].states().to_vec();
        states[2] = vec![1e3, 1e3];
        let bad = Trajectory::new(grid.clone(), states).unwrap();
        assert!(!tube_contains(&tube, &bad).unwrap());
        assert_eq!(tube_violations(&tube, &[trajs[0].clone(), bad.clone()]).unwrap(), 1);
        let per_instant = per_instant_violations(&tube, std::slice::from_ref(&bad)).unwrap();
        assert_eq!(per_instant.iter().sum::<u64>(), 1);
        assert_eq!(per_instant[2], 1);

        // An all-outside set counts every trajectory.
        let far = Trajectory::new(grid.clone(), vec![vec![1e3, 1e3]; grid.len()]).unwrap();
        let all_outside = vec![far.clone(), far.clone(), far];
        assert_eq!(
            tube_violations(&tube, &all_outside).unwrap(),
            all_outside.len() as u64
        );
    }

    #[test]
    fn large_lambda_shrinks_width_variance() {
        let setup = builtin_model("linear2d").unwrap();
        let grid = uniform_grid(0.0, 10.0, 11);
        let trajs = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            60,
            &grid,
            1e-2,
            13,
        )
        .unwrap();
        let variance = |tube: &TubeEstimate| {
            let widths: Vec<f64> = tube
                .slices()
                .iter()
                .flat_map(|s| s.widths().iter().copied())
                .collect();
            let mean = widths.iter().sum::<f64>() / widths.len() as f64;
            widths.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / widths.len() as f64
        };
        let loose = fit_tube(
            &trajs,
            1,
            0.25,
            &TubeOptions {
                lambda: 0.0,
                ..TubeOptions::default()
            },
        )
        .unwrap();
        let smoothed = fit_tube(
            &trajs,
            1,
            0.25,
            &TubeOptions {
                lambda: 1e3,
                ..TubeOptions::default()
            },
        )
        .unwrap();
        assert!(
            variance(&smoothed) < variance(&loose),
            "smoothing did not reduce width variance: {} vs {}",
            variance(&smoothed),
            variance(&loose)
        );
    }

    #[test]
    fn membership_is_conjunction_of_instant_membership() {
        let setup = builtin_model("linear2d").unwrap();
        let grid = uniform_grid(0.0, 10.0, 7);
        let trajs = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            40,
            &grid,
            1e-2,
            5,
        )
        .unwrap();
        let tube = fit_tube(&trajs, 1, 0.25, &TubeOptions::default()).unwrap();
        let fresh = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            40,
            &grid,
            1e-2,
            6,
        )
        .unwrap();
        for t in &fresh {
            let per_instant = tube
                .slices()
                .iter()
                .zip(t.states())
                .all(|(slice, state)| slice.contains(state));
            assert_eq!(tube_contains(&tube, t).unwrap(), per_instant);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let setup = builtin_model("linear2d").unwrap();
        let grid = uniform_grid(0.0, 10.0, 5);
        let trajs = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            10,
            &grid,
            1e-2,
            7,
        )
        .unwrap();
        let tube = fit_tube(&trajs, 1, 0.25, &TubeOptions::default()).unwrap();
        let other_grid = uniform_grid(0.0, 10.0, 6);
        let other = sample_trajectories(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            1,
            &other_grid,
            1e-2,
            7,
        )
        .unwrap();
        assert!(matches!(
            tube_contains(&tube, &other[0]),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn json_round_trip() {
        let tube = toy_tube(&[vec![0.4], vec![0.6]], 1.5);
        let back = TubeEstimate::from_json(&tube.to_json().unwrap()).unwrap();
        assert_eq!(back, tube);
    }
}
