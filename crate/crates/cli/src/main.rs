//! Experiment runner: split sweeps, the wait-and-judge baseline, coverage
//! studies, reach tubes, and the de-randomization cost demo, with CSV/JSON
//! outputs and reproducible seeding.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use reachcert::experiments::{
    run_coverage_study, run_derand_demo, run_split_sweep, run_tube_experiment,
    run_wait_and_judge, write_coverage_csv, write_derand_csv, write_manifest, write_sweep_csv,
    write_wnj_csv, CoverageConfig, ExperimentConfig, RunManifest,
};
use reachcert::rbf::RbfEstimateDocument;
use reachcert::sim::{
    builtin_model, sample_scenarios, write_scenario_meta, write_scenarios_csv, ScenarioSetMeta,
};
use reachcert::seeds;
use reachcert::tube::{write_instant_violations_csv, TubeEstimate};

#[derive(Parser)]
#[command(
    name = "reachcert",
    version,
    about = "Estimate reachable sets from simulated scenarios and certify them with binomial-tail holdout bounds"
)]
struct Cli {
    /// Experiment config JSON; built-in model defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit on N training scenarios and certify on M holdout scenarios for
    /// every configured (N, M) split.
    Sweep {
        /// Built-in model when no config file is given.
        #[arg(long, default_value = "duffing")]
        model: String,
        /// Also write the sampled scenario sets (CSV plus JSON sidecar).
        #[arg(long)]
        dump_scenarios: bool,
    },
    /// Wait-and-judge baseline: fit on the full dataset and bound epsilon
    /// from the support-scenario count (N + 1 fits).
    Wnj {
        #[arg(long, default_value = "duffing")]
        model: String,
        /// Dataset size; defaults to the config's total_samples.
        #[arg(long)]
        total: Option<u64>,
    },
    /// Certificate coverage study on linear2d against the analytic terminal
    /// distribution.
    Coverage {
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[arg(long, default_value_t = 200)]
        train: u64,
        #[arg(long, default_value_t = 200)]
        holdout: u64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 2.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1_000_000)]
        truth_samples: u64,
    },
    /// Reach tube experiment: fit a time-varying tube and certify holdout
    /// trajectories.
    Tube {
        #[arg(long, default_value = "linear2d")]
        model: String,
        /// Width-smoothing weight; defaults to the config value.
        #[arg(long)]
        lambda: Option<f64>,
        /// Grid instants; defaults to the config value.
        #[arg(long)]
        instants: Option<usize>,
    },
    /// Tabulate the Lipschitz-bump construction and zeroth-order query
    /// bounds over dimensions and violation levels.
    Derand {
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 6, 10, 20])]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.01f64, 0.1])]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        lipschitz: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Summarize a saved estimate, tube, config, or manifest JSON.
    Inspect {
        path: PathBuf,
        /// Comma-separated state; membership is reported for estimates.
        #[arg(long)]
        point: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let out_dir = resolve_out_dir(&cli);
    match run(&cli, &out_dir) {
        Ok(()) => {}
        Err(err) => {
            write_error_manifest(&out_dir, &err);
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn resolve_out_dir(cli: &Cli) -> PathBuf {
    if let Some(dir) = &cli.out_dir {
        return dir.clone();
    }
    if let Some(path) = &cli.config {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(config) = ExperimentConfig::from_json(&text) {
                return config.out_dir;
            }
        }
    }
    PathBuf::from("out")
}

fn write_error_manifest(out_dir: &Path, err: &anyhow::Error) {
    let _ = std::fs::create_dir_all(out_dir);
    let payload = serde_json::json!({ "error": format!("{err:#}") });
    let path = out_dir.join("error_manifest.json");
    if std::fs::write(&path, serde_json::to_string_pretty(&payload).unwrap_or_default()).is_err() {
        eprintln!("error: could not write {}", path.display());
    }
}

fn load_config(cli: &Cli, model: &str) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::from_json(&text).context("parsing config")?
        }
        None => ExperimentConfig::for_model(model)?,
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        config.out_dir = dir.clone();
    }
    Ok(config)
}

fn run(cli: &Cli, out_dir: &Path) -> Result<()> {
    match &cli.command {
        Command::Sweep {
            model,
            dump_scenarios,
        } => cmd_sweep(cli, model, *dump_scenarios),
        Command::Wnj { model, total } => cmd_wnj(cli, model, *total),
        Command::Coverage {
            trials,
            train,
            holdout,
            beta,
            horizon,
            truth_samples,
        } => cmd_coverage(
            cli,
            out_dir,
            CoverageConfig {
                trials: *trials,
                train: *train,
                holdout: *holdout,
                confidence: *beta,
                horizon: *horizon,
                truth_samples: *truth_samples,
                seed: cli.seed.unwrap_or(42),
                ..CoverageConfig::default()
            },
        ),
        Command::Tube {
            model,
            lambda,
            instants,
        } => cmd_tube(cli, model, *lambda, *instants),
        Command::Derand {
            dims,
            eps,
            lipschitz,
            samples,
        } => cmd_derand(cli, out_dir, dims, eps, *lipschitz, *samples),
        Command::Inspect { path, point } => cmd_inspect(path, point.as_deref()),
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_sweep(cli: &Cli, model: &str, dump_scenarios: bool) -> Result<()> {
    let start = Instant::now();
    let config = load_config(cli, model)?;
    prepare_dir(&config.out_dir)?;

    let outcome = run_split_sweep(&config)?;
    let csv_path = config.out_dir.join("sweep.csv");
    write_sweep_csv(&csv_path, &outcome.rows)?;

    let estimates_dir = config.out_dir.join("estimates");
    prepare_dir(&estimates_dir)?;
    let mut outputs = vec!["sweep.csv".to_string()];
    for doc in &outcome.estimates {
        let name = format!("estimates/row_{}.json", doc.data_fingerprint.get(..12).unwrap_or("estimate"));
        std::fs::write(config.out_dir.join(&name), doc.to_json()?)?;
        outputs.push(name);
    }
    if dump_scenarios {
        outputs.extend(dump_scenario_sets(&config)?);
    }

    for row in &outcome.rows {
        println!(
            "N={} M={} vol={:.4} k_hat={} e_hat={:.4} epsilon={:.4} ({:.2}s)",
            row.n, row.m, row.volume, row.violations, row.empirical_error, row.epsilon, row.runtime_s
        );
    }
    for failure in &outcome.failures {
        eprintln!("row (N={}, M={}) failed: {}", failure.n, failure.m, failure.error);
    }

    let mut manifest = RunManifest::new("sweep", config.seed, serde_json::to_value(&config)?);
    manifest.outputs = outputs;
    manifest.failures = outcome.failures.clone();
    manifest.summary = serde_json::json!({
        "rows": outcome.rows.len(),
        "best_epsilon": outcome
            .rows
            .iter()
            .map(|r| r.epsilon)
            .fold(f64::INFINITY, f64::min),
    });
    manifest.runtime_s = start.elapsed().as_secs_f64();
    write_manifest(&config.out_dir.join("manifest.json"), &manifest)?;

    if !outcome.failures.is_empty() {
        anyhow::bail!("{} sweep row(s) failed; see manifest.json", outcome.failures.len());
    }
    Ok(())
}

fn dump_scenario_sets(config: &ExperimentConfig) -> Result<Vec<String>> {
    let setup = builtin_model(&config.model)?;
    let scenario_dir = config.out_dir.join("scenarios");
    prepare_dir(&scenario_dir)?;
    let mut outputs = Vec::new();
    for (index, &(n, m)) in config.splits.iter().enumerate() {
        for (label, count, tag) in [
            (seeds::labels::TRAIN, n, "train"),
            (seeds::labels::HOLDOUT, m, "holdout"),
        ] {
            let seed = seeds::derive_seed(config.seed, label, index as u64);
            let scenarios = sample_scenarios(
                &setup.model,
                &setup.initial_box,
                &setup.disturbance_box,
                count,
                setup.t0,
                setup.t1,
                config.integrator_step,
                seed,
            )?;
            let base = format!("scenarios/split{index}_{tag}");
            write_scenarios_csv(&config.out_dir.join(format!("{base}.csv")), &scenarios)?;
            write_scenario_meta(
                &config.out_dir.join(format!("{base}.meta.json")),
                &ScenarioSetMeta {
                    model: config.model.clone(),
                    initial_box: setup.initial_box.clone(),
                    disturbance_box: setup.disturbance_box.clone(),
                    t0: setup.t0,
                    t1: setup.t1,
                    step: config.integrator_step,
                    seed,
                    count,
                    rng: seeds::RNG_IDENTITY.to_string(),
                },
            )?;
            outputs.push(format!("{base}.csv"));
            outputs.push(format!("{base}.meta.json"));
        }
    }
    Ok(outputs)
}

fn cmd_wnj(cli: &Cli, model: &str, total: Option<u64>) -> Result<()> {
    let start = Instant::now();
    let mut config = load_config(cli, model)?;
    if let Some(total) = total {
        config.total_samples = total;
        // Splits are not used by wait-and-judge but must stay consistent.
        config.splits = vec![(total - total / 2, total / 2)];
    }
    prepare_dir(&config.out_dir)?;

    let row = run_wait_and_judge(&config)?;
    write_wnj_csv(&config.out_dir.join("wnj.csv"), &row)?;
    println!(
        "N={} support={} vol={:.4} epsilon={:.4} ({:.2}s)",
        row.n, row.support_count, row.volume, row.epsilon, row.runtime_s
    );

    let mut manifest = RunManifest::new("wnj", config.seed, serde_json::to_value(&config)?);
    manifest.outputs = vec!["wnj.csv".into()];
    manifest.summary = serde_json::json!({
        "support_count": row.support_count,
        "epsilon": row.epsilon,
    });
    manifest.runtime_s = start.elapsed().as_secs_f64();
    write_manifest(&config.out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn cmd_coverage(cli: &Cli, out_dir: &Path, config: CoverageConfig) -> Result<()> {
    let start = Instant::now();
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| out_dir.to_path_buf());
    prepare_dir(&out_dir)?;

    let summary = run_coverage_study(&config)?;
    write_coverage_csv(&out_dir.join("coverage.csv"), &summary)?;
    println!(
        "trials={} miscoverage={:.4} (beta={})",
        config.trials, summary.miscoverage, config.confidence
    );

    let mut manifest = RunManifest::new("coverage", config.seed, serde_json::to_value(config)?);
    manifest.outputs = vec!["coverage.csv".into()];
    manifest.summary = serde_json::json!({ "miscoverage": summary.miscoverage });
    manifest.runtime_s = start.elapsed().as_secs_f64();
    write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn cmd_tube(cli: &Cli, model: &str, lambda: Option<f64>, instants: Option<usize>) -> Result<()> {
    let start = Instant::now();
    let mut config = load_config(cli, model)?;
    if let Some(lambda) = lambda {
        config.tube.lambda = lambda;
    }
    if let Some(instants) = instants {
        config.tube.instants = instants;
    }
    prepare_dir(&config.out_dir)?;

    let outcome = run_tube_experiment(&config)?;
    write_sweep_csv(&config.out_dir.join("tube.csv"), std::slice::from_ref(&outcome.row))?;
    write_instant_violations_csv(
        &config.out_dir.join("tube_instants.csv"),
        outcome.tube.times(),
        &outcome.per_instant,
    )?;
    std::fs::write(config.out_dir.join("tube_estimate.json"), outcome.tube.to_json()?)?;
    println!(
        "N={} M={} k_hat={} e_hat={:.4} epsilon={:.4} lambda={} ({:.2}s)",
        outcome.row.n,
        outcome.row.m,
        outcome.row.violations,
        outcome.row.empirical_error,
        outcome.row.epsilon,
        config.tube.lambda,
        outcome.row.runtime_s
    );

    let mut manifest = RunManifest::new("tube", config.seed, serde_json::to_value(&config)?);
    manifest.outputs = vec![
        "tube.csv".into(),
        "tube_instants.csv".into(),
        "tube_estimate.json".into(),
    ];
    manifest.summary = serde_json::json!({
        "violations": outcome.row.violations,
        "epsilon": outcome.row.epsilon,
    });
    manifest.runtime_s = start.elapsed().as_secs_f64();
    write_manifest(&config.out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn cmd_derand(
    cli: &Cli,
    out_dir: &Path,
    dims: &[usize],
    eps: &[f64],
    lipschitz: f64,
    samples: u64,
) -> Result<()> {
    let start = Instant::now();
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| out_dir.to_path_buf());
    prepare_dir(&out_dir)?;
    let seed = cli.seed.unwrap_or(42);

    let rows = run_derand_demo(dims, eps, lipschitz, samples, seed)?;
    write_derand_csv(&out_dir.join("derand.csv"), &rows)?;
    for row in &rows {
        println!(
            "d={} eps={} delta*={:.4} exact={:.3e} mc={:.3e} queries>={}",
            row.dimension,
            row.epsilon,
            row.delta_star,
            row.exact_probability,
            row.mc_estimate,
            row.query_bound
        );
    }

    let mut manifest = RunManifest::new(
        "derand",
        seed,
        serde_json::json!({
            "dims": dims,
            "eps": eps,
            "lipschitz": lipschitz,
            "samples": samples,
        }),
    );
    manifest.outputs = vec!["derand.csv".into()];
    manifest.summary = serde_json::json!({ "rows": rows.len() });
    manifest.runtime_s = start.elapsed().as_secs_f64();
    write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn cmd_inspect(path: &Path, point: Option<&str>) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;

    if let Ok(doc) = RbfEstimateDocument::from_json(&text) {
        let estimate = doc.estimate()?;
        println!(
            "rbf estimate: model={} m={} gamma={} vol={:.6} seed={} fingerprint={}",
            doc.model,
            doc.m,
            doc.gamma,
            estimate.volume_proxy(),
            doc.seed,
            &doc.data_fingerprint[..12.min(doc.data_fingerprint.len())]
        );
        println!(
            "fit: objective={:.6e} violation={:.2e} iterations={} converged={}",
            doc.fit_report.objective,
            doc.fit_report.constraint_violation,
            doc.fit_report.iterations,
            doc.fit_report.converged
        );
        if let Some(spec) = point {
            let x = parse_point(spec)?;
            println!(
                "point {:?}: score={:.6} contains={}",
                x,
                estimate.score(&x),
                estimate.contains(&x)
            );
        }
        return Ok(());
    }

    if let Ok(tube) = TubeEstimate::from_json(&text) {
        println!(
            "tube estimate: instants={} m={} gamma={} lambda={} objective={:.6e} converged={}",
            tube.num_instants(),
            tube.basis_count(),
            tube.threshold(),
            tube.lambda(),
            tube.fit_report().objective,
            tube.fit_report().converged
        );
        return Ok(());
    }

    if let Ok(config) = ExperimentConfig::from_json(&text) {
        println!(
            "experiment config: model={} m={} gamma={} beta={} total={} splits={:?} seed={}",
            config.model,
            config.basis_count,
            config.rbf_threshold,
            config.confidence,
            config.total_samples,
            config.splits,
            config.seed
        );
        return Ok(());
    }

    if let Ok(manifest) = serde_json::from_str::<RunManifest>(&text) {
        println!(
            "run manifest: command={} version={} seed={} outputs={:?} failures={} runtime={:.2}s",
            manifest.command,
            manifest.version,
            manifest.seed,
            manifest.outputs,
            manifest.failures.len(),
            manifest.runtime_s
        );
        return Ok(());
    }

    anyhow::bail!("unrecognized document: {}", path.display());
}

fn parse_point(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("parsing coordinate '{t}'"))
        })
        .collect()
}
