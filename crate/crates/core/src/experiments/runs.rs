//! The experiment runners behind the CLI subcommands.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::derand::{calibrate_delta, zeroth_order_query_lower_bound, BumpInstance, QueryBound};
use crate::error::{Error, Result};
use crate::fit::{count_support_scenarios, fit_rbf, FitOptions};
use crate::rbf::{data_fingerprint, RbfEstimateDocument};
use crate::seeds::{self, labels};
use crate::sim::{
    builtin_model, linear2d_transition, sample_scenarios, sample_trajectories, uniform_grid,
    ModelSetup,
};
use crate::stats::{empirical_error, holdout_certificate, wait_and_judge_certificate};
use crate::tube::{fit_tube, per_instant_violations, tube_violations, TubeEstimate, TubeOptions};

use super::{ExperimentConfig, ResultRow};

/// A sweep row that could not be produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub n: u64,
    pub m: u64,
    pub error: String,
}

/// All rows of a split sweep plus the fitted estimates behind them.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub estimates: Vec<RbfEstimateDocument>,
    pub failures: Vec<RowFailure>,
}

/// Runs the `(N, M)` split sweep: per split, fit on `N` fresh training
/// scenarios and certify on `M` fresh holdout scenarios from a disjoint
/// stream. Row failures are recorded and the sweep continues.
pub fn run_split_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let setup = builtin_model(&config.model)?;
    let mut outcome = SweepOutcome {
        rows: Vec::new(),
        estimates: Vec::new(),
        failures: Vec::new(),
    };

    for (index, &(n, m)) in config.splits.iter().enumerate() {
        match sweep_row(config, &setup, index as u64, n, m) {
            Ok((row, doc)) => {
                outcome.rows.push(row);
                outcome.estimates.push(doc);
            }
            Err(err) => outcome.failures.push(RowFailure {
                n,
                m,
                error: err.to_string(),
            }),
        }
    }
    Ok(outcome)
}

fn sweep_row(
    config: &ExperimentConfig,
    setup: &ModelSetup,
    index: u64,
    n: u64,
    m: u64,
) -> Result<(ResultRow, RbfEstimateDocument)> {
    let start = Instant::now();
    let train_seed = seeds::derive_seed(config.seed, labels::TRAIN, index);
    let holdout_seed = seeds::derive_seed(config.seed, labels::HOLDOUT, index);
    let fit_opts = FitOptions {
        seed: seeds::derive_seed(config.seed, labels::KMEANS, index),
        ..FitOptions::default()
    };

    let train = sample_scenarios(
        &setup.model,
        &setup.initial_box,
        &setup.disturbance_box,
        n,
        setup.t0,
        setup.t1,
        config.integrator_step,
        train_seed,
    )?;
    let states: Vec<Vec<f64>> = train.into_iter().map(|s| s.state).collect();
    let (estimate, report) = fit_rbf(&states, config.basis_count, config.rbf_threshold, &fit_opts)?;

    let holdout = sample_scenarios(
        &setup.model,
        &setup.initial_box,
        &setup.disturbance_box,
        m,
        setup.t0,
        setup.t1,
        config.integrator_step,
        holdout_seed,
    )?;
    let violations = estimate.count_violations(&holdout)?;
    let certificate = holdout_certificate(violations, m, config.confidence)?;

    let row = ResultRow {
        n,
        m,
        volume: estimate.volume_proxy(),
        violations,
        empirical_error: empirical_error(violations, m)?,
        epsilon: certificate.epsilon,
        runtime_s: start.elapsed().as_secs_f64(),
        seed: config.seed,
    };
    let doc = RbfEstimateDocument::new(
        &config.model,
        &estimate,
        report,
        config.seed,
        data_fingerprint(&states),
    );
    Ok((row, doc))
}

/// One line of the wait-and-judge baseline table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitAndJudgeRow {
    pub n: u64,
    pub support_count: u64,
    pub volume: f64,
    pub epsilon: f64,
    pub runtime_s: f64,
    pub seed: u64,
}

/// Fits on all `total_samples` scenarios, counts support scenarios by
/// leave-one-out refits (`N + 1` fits), and converts the count into the
/// scenario a-posteriori bound.
pub fn run_wait_and_judge(config: &ExperimentConfig) -> Result<WaitAndJudgeRow> {
    config.validate()?;
    let setup = builtin_model(&config.model)?;
    let n = config.total_samples;
    let start = Instant::now();

    let scenarios = sample_scenarios(
        &setup.model,
        &setup.initial_box,
        &setup.disturbance_box,
        n,
        setup.t0,
        setup.t1,
        config.integrator_step,
        seeds::derive_seed(config.seed, labels::WNJ, 0),
    )?;
    let states: Vec<Vec<f64>> = scenarios.into_iter().map(|s| s.state).collect();
    let fit_opts = FitOptions {
        seed: seeds::derive_seed(config.seed, labels::WNJ, 1),
        ..FitOptions::default()
    };
    let (estimate, _) = fit_rbf(&states, config.basis_count, config.rbf_threshold, &fit_opts)?;
    let support =
        count_support_scenarios(&states, config.basis_count, config.rbf_threshold, &fit_opts)?;
    let certificate = wait_and_judge_certificate(support, n, config.confidence)?;

    Ok(WaitAndJudgeRow {
        n,
        support_count: support,
        volume: estimate.volume_proxy(),
        epsilon: certificate.epsilon,
        runtime_s: start.elapsed().as_secs_f64(),
        seed: config.seed,
    })
}

/// Settings of the certificate coverage study on the `linear2d` system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub trials: u64,
    pub train: u64,
    pub holdout: u64,
    pub confidence: f64,
    pub basis_count: usize,
    pub integrator_step: f64,
    /// Terminal time of the studied reachable set. At the system's native
    /// horizon of 10 the terminal cloud shrinks below the minimum basis
    /// width and every certificate holds vacuously; the default keeps the
    /// geometry well above that floor.
    pub horizon: f64,
    /// Monte Carlo points for the quasi-exact true error, drawn from the
    /// analytic terminal distribution.
    pub truth_samples: u64,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            trials: 500,
            train: 200,
            holdout: 200,
            confidence: 0.1,
            basis_count: 1,
            integrator_step: crate::sim::DEFAULT_STEP,
            horizon: 2.0,
            truth_samples: 1_000_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTrialRow {
    pub trial: u64,
    pub violations: u64,
    pub epsilon: f64,
    pub true_error: f64,
    pub miscovered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub config: CoverageConfig,
    pub miscoverage: f64,
    pub rows: Vec<CoverageTrialRow>,
}

/// Estimates how often the certificate bound is violated: per trial, fresh
/// training and holdout draws produce `(k, M, beta, epsilon)`, and the true
/// error of the fitted set is computed against the closed-form pushforward
/// of the initial box. The miscoverage fraction should not exceed `beta`.
pub fn run_coverage_study(config: &CoverageConfig) -> Result<CoverageSummary> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if !(config.confidence.is_finite() && 0.0 < config.confidence && config.confidence < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "confidence {} outside (0, 1)",
            config.confidence
        )));
    }
    if config.truth_samples == 0 || config.train == 0 || config.holdout == 0 {
        return Err(Error::InvalidConfig(
            "train, holdout, and truth_samples must be positive".into(),
        ));
    }
    if !(config.horizon.is_finite() && config.horizon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "horizon {} must be positive",
            config.horizon
        )));
    }
    let setup = builtin_model("linear2d")?;
    let t1 = setup.t0 + config.horizon;
    let transition = linear2d_transition(config.horizon);

    let mut rows = Vec::with_capacity(config.trials as usize);
    let mut miscovered = 0u64;
    for trial in 0..config.trials {
        let train_seed = seeds::derive_seed(config.seed, labels::TRAIN, trial);
        let holdout_seed = seeds::derive_seed(config.seed, labels::HOLDOUT, trial);
        let truth_seed = seeds::derive_seed(config.seed, labels::TRUTH, trial);
        let fit_opts = FitOptions {
            seed: seeds::derive_seed(config.seed, labels::KMEANS, trial),
            ..FitOptions::default()
        };

        let train = sample_scenarios(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            config.train,
            setup.t0,
            t1,
            config.integrator_step,
            train_seed,
        )?;
        let states: Vec<Vec<f64>> = train.into_iter().map(|s| s.state).collect();
        let (estimate, _) = fit_rbf(&states, config.basis_count, 0.25, &fit_opts)?;

        let holdout = sample_scenarios(
            &setup.model,
            &setup.initial_box,
            &setup.disturbance_box,
            config.holdout,
            setup.t0,
            t1,
            config.integrator_step,
            holdout_seed,
        )?;
        let violations = estimate.count_violations(&holdout)?;
        let certificate = holdout_certificate(violations, config.holdout, config.confidence)?;

        // Quasi-exact true error: push initial-box samples through the
        // closed-form transition instead of integrating.
        let mut rng = seeds::stream_rng(truth_seed, labels::TRUTH, 0);
        let mut outside = 0u64;
        for _ in 0..config.truth_samples {
            let x0 = setup.initial_box.sample(&mut rng);
            let y = [
                transition[0][0] * x0[0] + transition[0][1] * x0[1],
                transition[1][0] * x0[0] + transition[1][1] * x0[1],
            ];
            if !estimate.contains(&y) {
                outside += 1;
            }
        }
        let true_error = outside as f64 / config.truth_samples as f64;
        let is_miscovered = true_error > certificate.epsilon;
        miscovered += u64::from(is_miscovered);
        rows.push(CoverageTrialRow {
            trial,
            violations,
            epsilon: certificate.epsilon,
            true_error,
            miscovered: is_miscovered,
        });
    }

    Ok(CoverageSummary {
        config: *config,
        miscoverage: miscovered as f64 / config.trials as f64,
        rows,
    })
}

/// Tube experiment output: the fitted tube, the certified row, and the
/// per-instant violation breakdown.
#[derive(Debug, Clone)]
pub struct TubeOutcome {
    pub tube: TubeEstimate,
    pub row: ResultRow,
    pub per_instant: Vec<u64>,
}

/// Fits a reach tube on `N` training trajectories and certifies it on `M`
/// holdout trajectories, each counted as one sample.
pub fn run_tube_experiment(config: &ExperimentConfig) -> Result<TubeOutcome> {
    config.validate()?;
    let setup = builtin_model(&config.model)?;
    let (n, m) = config.splits[0];
    let grid = uniform_grid(setup.t0, setup.t1, config.tube.instants);
    let start = Instant::now();

    let train = sample_trajectories(
        &setup.model,
        &setup.initial_box,
        &setup.disturbance_box,
        n,
        &grid,
        config.integrator_step,
        seeds::derive_seed(config.seed, labels::TRAIN, 0),
    )?;
    let tube_opts = TubeOptions {
        lambda: config.tube.lambda,
        fit: FitOptions {
            seed: seeds::derive_seed(config.seed, labels::KMEANS, 0),
            ..FitOptions::default()
        },
        ..TubeOptions::default()
    };
    let tube = fit_tube(&train, config.basis_count, config.rbf_threshold, &tube_opts)?;

    let holdout = sample_trajectories(
        &setup.model,
        &setup.initial_box,
        &setup.disturbance_box,
        m,
        &grid,
        config.integrator_step,
        seeds::derive_seed(config.seed, labels::HOLDOUT, 0),
    )?;
    let violations = tube_violations(&tube, &holdout)?;
    let per_instant = per_instant_violations(&tube, &holdout)?;
    let certificate = holdout_certificate(violations, m, config.confidence)?;

    let volume = tube
        .slices()
        .iter()
        .map(|s| s.widths().iter().map(|w| w * w).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let row = ResultRow {
        n,
        m,
        volume,
        violations,
        empirical_error: empirical_error(violations, m)?,
        epsilon: certificate.epsilon,
        runtime_s: start.elapsed().as_secs_f64(),
        seed: config.seed,
    };
    Ok(TubeOutcome {
        tube,
        row,
        per_instant,
    })
}

/// One line of the de-randomization demo table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerandRow {
    pub dimension: usize,
    pub epsilon: f64,
    pub delta_star: f64,
    pub exact_probability: f64,
    pub mc_estimate: f64,
    pub query_bound: QueryBound,
}

/// Tabulates the calibrated bump over `(dimension, epsilon)` pairs: peak
/// height, exact violation probability, a Monte Carlo cross-check, and the
/// zeroth-order query bound at `gamma = delta_star`.
pub fn run_derand_demo(
    dims: &[usize],
    epsilons: &[f64],
    lipschitz: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<DerandRow>> {
    if dims.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidConfig(
            "derand demo needs at least one dimension and one epsilon".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be positive".into()));
    }
    let mut rows = Vec::with_capacity(dims.len() * epsilons.len());
    for (index, (&dimension, &epsilon)) in dims
        .iter()
        .flat_map(|d| epsilons.iter().map(move |e| (d, e)))
        .enumerate()
    {
        let delta_star = calibrate_delta(lipschitz, dimension, epsilon)?;
        let bump = BumpInstance::new(dimension, lipschitz, delta_star)?;
        let mc_seed = seeds::derive_seed(seed, labels::BALL, index as u64);
        rows.push(DerandRow {
            dimension,
            epsilon,
            delta_star,
            exact_probability: bump.violation_probability(),
            mc_estimate: bump.mc_violation_estimate(samples, mc_seed),
            query_bound: zeroth_order_query_lower_bound(lipschitz, delta_star, dimension)?,
        });
    }
    Ok(rows)
}
