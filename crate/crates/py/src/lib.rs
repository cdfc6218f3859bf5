//! Python bindings: binomial tail certificates, scenario simulation, RBF
//! set fitting, and the Lipschitz-bump demo.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use reachcert::derand;
use reachcert::fit::{self, FitOptions};
use reachcert::rbf;
use reachcert::sim;
use reachcert::stats;

fn to_py_err(err: reachcert::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// P(X <= k) for X ~ Binomial(m, e).
#[pyfunction]
fn binomial_cdf(k: u64, m: u64, e: f64) -> PyResult<f64> {
    stats::binomial_cdf(k, m, e).map_err(to_py_err)
}

/// Largest violation rate e with Bin(k, M, e) >= beta.
#[pyfunction]
fn binomial_tail_inversion(k: u64, m: u64, beta: f64) -> PyResult<f64> {
    stats::binomial_tail_inversion(k, m, beta).map_err(to_py_err)
}

/// ln(1/beta)/M, the zero-violation fast-rate bound.
#[pyfunction]
fn fast_rate_bound(m: u64, beta: f64) -> PyResult<f64> {
    stats::fast_rate_bound(m, beta).map_err(to_py_err)
}

/// k/M + sqrt(ln(1/beta)/(2M)), the CLT-scaling diagnostic.
#[pyfunction]
fn clt_scale_bound(k: u64, m: u64, beta: f64) -> PyResult<f64> {
    stats::clt_scale_bound(k, m, beta).map_err(to_py_err)
}

/// Wait-and-judge epsilon from a support-scenario count.
#[pyfunction]
fn wait_and_judge_epsilon(s: u64, n: u64, beta: f64) -> PyResult<f64> {
    stats::wait_and_judge_epsilon(s, n, beta).map_err(to_py_err)
}

/// Observed violation fraction k/M.
#[pyfunction]
fn empirical_error(violations: u64, m: u64) -> PyResult<f64> {
    stats::empirical_error(violations, m).map_err(to_py_err)
}

/// The (k, M, beta, epsilon) holdout certificate.
#[pyclass(frozen)]
struct HoldoutCertificate {
    #[pyo3(get)]
    violations: u64,
    #[pyo3(get)]
    holdout_size: u64,
    #[pyo3(get)]
    confidence: f64,
    #[pyo3(get)]
    epsilon: f64,
}

#[pymethods]
impl HoldoutCertificate {
    fn __repr__(&self) -> String {
        format!(
            "HoldoutCertificate(violations={}, holdout_size={}, confidence={}, epsilon={})",
            self.violations, self.holdout_size, self.confidence, self.epsilon
        )
    }
}

#[pyfunction]
fn holdout_certificate(k: u64, m: u64, beta: f64) -> PyResult<HoldoutCertificate> {
    let cert = stats::holdout_certificate(k, m, beta).map_err(to_py_err)?;
    Ok(HoldoutCertificate {
        violations: cert.violations,
        holdout_size: cert.holdout_size,
        confidence: cert.confidence,
        epsilon: cert.epsilon,
    })
}

/// Terminal states for `n` i.i.d. scenarios of a built-in model
/// (`duffing`, `quadrotor`, or `linear2d`).
#[pyfunction]
#[pyo3(signature = (model, n, seed, step=sim::DEFAULT_STEP))]
fn sample_scenarios(model: &str, n: u64, seed: u64, step: f64) -> PyResult<Vec<Vec<f64>>> {
    let setup = sim::builtin_model(model).map_err(to_py_err)?;
    let scenarios = sim::sample_scenarios(
        &setup.model,
        &setup.initial_box,
        &setup.disturbance_box,
        n,
        setup.t0,
        setup.t1,
        step,
        seed,
    )
    .map_err(to_py_err)?;
    Ok(scenarios.into_iter().map(|s| s.state).collect())
}

/// RK4 integration of a built-in model; returns (times, states).
#[pyfunction]
#[pyo3(signature = (model, x0, u, t0, t1, step=sim::DEFAULT_STEP))]
fn integrate(
    model: &str,
    x0: Vec<f64>,
    u: Vec<f64>,
    t0: f64,
    t1: f64,
    step: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let setup = sim::builtin_model(model).map_err(to_py_err)?;
    let traj = sim::integrate(&setup.model, &x0, &u, t0, t1, step).map_err(to_py_err)?;
    Ok((traj.times().to_vec(), traj.states().to_vec()))
}

/// A fitted RBF sublevel-set reachable set estimate.
#[pyclass(frozen)]
struct RbfEstimate {
    inner: rbf::RbfEstimate,
    objective: f64,
    iterations: u64,
    converged: bool,
}

#[pymethods]
impl RbfEstimate {
    /// Fit the minimum-volume estimate containing all samples.
    #[staticmethod]
    #[pyo3(signature = (samples, m, gamma=0.25, seed=0))]
    fn fit(samples: Vec<Vec<f64>>, m: usize, gamma: f64, seed: u64) -> PyResult<Self> {
        let opts = FitOptions {
            seed,
            ..FitOptions::default()
        };
        let (inner, report) = fit::fit_rbf(&samples, m, gamma, &opts).map_err(to_py_err)?;
        Ok(Self {
            inner,
            objective: report.objective,
            iterations: report.iterations,
            converged: report.converged,
        })
    }

    fn score(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.state_dim() {
            return Err(PyValueError::new_err("state dimension mismatch"));
        }
        Ok(self.inner.score(&x))
    }

    fn contains(&self, x: Vec<f64>) -> PyResult<bool> {
        if x.len() != self.inner.state_dim() {
            return Err(PyValueError::new_err("state dimension mismatch"));
        }
        Ok(self.inner.contains(&x))
    }

    fn volume_proxy(&self) -> f64 {
        self.inner.volume_proxy()
    }

    fn count_violations(&self, holdout: Vec<Vec<f64>>) -> PyResult<u64> {
        let scenarios: Vec<sim::Scenario> = holdout
            .into_iter()
            .enumerate()
            .map(|(i, state)| sim::Scenario {
                state,
                index: i as u64,
            })
            .collect();
        self.inner.count_violations(&scenarios).map_err(to_py_err)
    }

    #[getter]
    fn centers(&self) -> Vec<Vec<f64>> {
        self.inner.centers().to_vec()
    }

    #[getter]
    fn widths(&self) -> Vec<f64> {
        self.inner.widths().to_vec()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.threshold()
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.objective
    }

    #[getter]
    fn iterations(&self) -> u64 {
        self.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.converged
    }

    fn __repr__(&self) -> String {
        format!(
            "RbfEstimate(m={}, gamma={}, volume_proxy={:.6})",
            self.inner.basis_count(),
            self.inner.threshold(),
            self.inner.volume_proxy()
        )
    }
}

/// delta* = L * eps^(1/d), the calibrated bump height.
#[pyfunction]
fn calibrate_delta(lipschitz: f64, dimension: usize, epsilon: f64) -> PyResult<f64> {
    derand::calibrate_delta(lipschitz, dimension, epsilon).map_err(to_py_err)
}

/// Exact violation probability (delta/L)^d of the cone bump.
#[pyfunction]
fn bump_violation_probability(dimension: usize, lipschitz: f64, height: f64) -> PyResult<f64> {
    Ok(derand::BumpInstance::new(dimension, lipschitz, height)
        .map_err(to_py_err)?
        .violation_probability())
}

/// Monte Carlo estimate of the bump violation probability.
#[pyfunction]
fn mc_violation_estimate(
    dimension: usize,
    lipschitz: f64,
    height: f64,
    n: u64,
    seed: u64,
) -> PyResult<f64> {
    Ok(derand::BumpInstance::new(dimension, lipschitz, height)
        .map_err(to_py_err)?
        .mc_violation_estimate(n, seed))
}

/// ceil((L/gamma)^d) as a float; inf when it saturates the exact range.
#[pyfunction]
fn zeroth_order_query_lower_bound(
    lipschitz: f64,
    gamma: f64,
    dimension: usize,
) -> PyResult<(f64, f64)> {
    let bound =
        derand::zeroth_order_query_lower_bound(lipschitz, gamma, dimension).map_err(to_py_err)?;
    let value = match bound {
        derand::QueryBound::Exact(v) => v as f64,
        derand::QueryBound::Saturated { .. } => f64::INFINITY,
    };
    Ok((value, bound.log10()))
}

#[pymodule]
fn reachcert_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SIGMA_MIN", rbf::SIGMA_MIN)?;
    m.add_class::<HoldoutCertificate>()?;
    m.add_class::<RbfEstimate>()?;
    m.add_function(wrap_pyfunction!(binomial_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_tail_inversion, m)?)?;
    m.add_function(wrap_pyfunction!(holdout_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(fast_rate_bound, m)?)?;
    m.add_function(wrap_pyfunction!(clt_scale_bound, m)?)?;
    m.add_function(wrap_pyfunction!(wait_and_judge_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_error, m)?)?;
    m.add_function(wrap_pyfunction!(sample_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_delta, m)?)?;
    m.add_function(wrap_pyfunction!(bump_violation_probability, m)?)?;
    m.add_function(wrap_pyfunction!(mc_violation_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(zeroth_order_query_lower_bound, m)?)?;
    Ok(())
}
