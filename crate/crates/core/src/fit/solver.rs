//! Augmented Lagrangian over a spectral projected-gradient inner solver.
//!
//! Inequality constraints `c_j(x) = score_j(x) - gamma >= 0` enter through
//! the Powell-Hestenes-Rockafellar term
//! `psi(c, lambda, rho) = (max(0, lambda - rho c)^2 - lambda^2) / (2 rho)`,
//! whose multiplier update is `lambda <- max(0, lambda - rho c)`. The box
//! `sigma >= sigma_min` is handled by projection. Among all outer iterates
//! the best feasible one wins, so a feasible start can only improve.

use crate::error::{Error, Result};
use crate::rbf::RbfEstimate;

use super::{FitOptions, FitReport, Initialization, WidthObjective};

const ARMIJO_C: f64 = 1e-4;
const HISTORY: usize = 8;
const RHO_INITIAL: f64 = 10.0;
const MAX_CYCLES: usize = 8;
// Grown every outer iteration: with a feasible start the violation never
// spikes, and multiplier convergence is linear at rate ~ 1/rho.
const RHO_GROWTH: f64 = 4.0;
const RHO_MAX: f64 = 1e6;
const STEP_MIN: f64 = 1e-12;
const STEP_MAX: f64 = 1e10;

struct Problem<'a> {
    samples: &'a [Vec<f64>],
    dim: usize,
    m: usize,
    gamma: f64,
    sigma_min: f64,
    wobj: WidthObjective,
}

impl<'a> Problem<'a> {
    fn n_vars(&self) -> usize {
        self.m * (self.dim + 1)
    }

    fn widths_offset(&self) -> usize {
        self.m * self.dim
    }

    fn project(&self, x: &mut [f64]) {
        let off = self.widths_offset();
        for w in &mut x[off..] {
            if *w < self.sigma_min {
                *w = self.sigma_min;
            }
        }
    }

    /// Width objective alone.
    fn width_objective(&self, x: &[f64]) -> f64 {
        let off = self.widths_offset();
        x[off..]
            .iter()
            .map(|&s| self.wobj.quad * s * s + self.wobj.lin * s)
            .sum()
    }

    /// `sum_i sigma_i^2`, for reporting.
    fn volume_objective(&self, x: &[f64]) -> f64 {
        let off = self.widths_offset();
        x[off..].iter().map(|&s| s * s).sum()
    }

    /// Constraint values `c_j = score_j - gamma`.
    fn constraints(&self, x: &[f64], out: &mut [f64]) {
        let off = self.widths_offset();
        for (j, sample) in self.samples.iter().enumerate() {
            let mut score = 0.0;
            for i in 0..self.m {
                let center = &x[i * self.dim..(i + 1) * self.dim];
                let sigma = x[off + i];
                let mut sq = 0.0;
                for (a, b) in sample.iter().zip(center) {
                    let d = a - b;
                    sq += d * d;
                }
                score += (-sq / (2.0 * sigma * sigma)).exp();
            }
            out[j] = score - self.gamma;
        }
    }

    fn max_violation(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.constraints(x, scratch);
        scratch.iter().fold(0.0f64, |acc, &c| acc.max(-c))
    }

    /// Augmented Lagrangian value and, when requested, its gradient.
    fn eval(&self, x: &[f64], lambda: &[f64], rho: f64, mut grad: Option<&mut [f64]>) -> f64 {
        let off = self.widths_offset();
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
            for i in 0..self.m {
                let s = x[off + i];
                g[off + i] = 2.0 * self.wobj.quad * s + self.wobj.lin;
            }
        }
        let mut value = self.width_objective(x);

        let mut bumps = vec![0.0f64; self.m];
        for (j, sample) in self.samples.iter().enumerate() {
            let mut score = 0.0;
            for i in 0..self.m {
                let center = &x[i * self.dim..(i + 1) * self.dim];
                let sigma = x[off + i];
                let mut sq = 0.0;
                for (a, b) in sample.iter().zip(center) {
                    let d = a - b;
                    sq += d * d;
                }
                let e = (-sq / (2.0 * sigma * sigma)).exp();
                bumps[i] = e;
                score += e;
            }
            let c = score - self.gamma;
            let w = (lambda[j] - rho * c).max(0.0);
            value += (w * w - lambda[j] * lambda[j]) / (2.0 * rho);
            if w > 0.0 {
                if let Some(g) = grad.as_deref_mut() {
                    for i in 0..self.m {
                        let e = bumps[i];
                        if e == 0.0 {
                            continue;
                        }
                        let sigma = x[off + i];
                        let inv_sq = 1.0 / (sigma * sigma);
                        let center = &x[i * self.dim..(i + 1) * self.dim];
                        let mut sq = 0.0;
                        // d(c)/d(mu_i) = e * (sample - mu_i) / sigma^2
                        for (k, (a, b)) in sample.iter().zip(center).enumerate() {
                            let d = a - b;
                            sq += d * d;
                            g[i * self.dim + k] -= w * e * d * inv_sq;
                        }
                        // d(c)/d(sigma_i) = e * |sample - mu_i|^2 / sigma^3
                        g[off + i] -= w * e * sq * inv_sq / sigma;
                    }
                }
            }
        }
        value
    }
}

/// Projected-gradient distance, the inner stationarity measure.
fn projected_gradient_inf(problem: &Problem, x: &[f64], grad: &[f64]) -> f64 {
    let off = problem.widths_offset();
    let mut norm = 0.0f64;
    for i in 0..x.len() {
        let mut trial = x[i] - grad[i];
        if i >= off && trial < problem.sigma_min {
            trial = problem.sigma_min;
        }
        norm = norm.max((trial - x[i]).abs());
    }
    norm
}

/// Nonmonotone spectral projected gradient on the augmented Lagrangian.
/// Returns the number of iterations used.
fn inner_solve(
    problem: &Problem,
    x: &mut Vec<f64>,
    lambda: &[f64],
    rho: f64,
    tol: f64,
    max_iter: usize,
) -> usize {
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut f = problem.eval(x, lambda, rho, Some(&mut grad));
    let mut history = [f; HISTORY];
    let mut hist_pos = 0usize;

    let mut alpha = {
        let pg = projected_gradient_inf(problem, x, &grad);
        if pg > 0.0 {
            (1.0 / pg).clamp(STEP_MIN, 1.0)
        } else {
            1.0
        }
    };

    let mut x_trial = vec![0.0; n];
    let mut grad_new = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut plateau = 0u32;
    for iter in 0..max_iter {
        let pg = projected_gradient_inf(problem, x, &grad);
        if pg <= tol || plateau >= 3 {
            return iter;
        }

        // Projected step direction.
        for i in 0..n {
            x_trial[i] = x[i] - alpha * grad[i];
        }
        problem.project(&mut x_trial);
        let mut gtd = 0.0;
        for i in 0..n {
            d[i] = x_trial[i] - x[i];
            gtd += grad[i] * d[i];
        }
        if gtd >= 0.0 {
            // Numerical dead end; shrink the step and retry.
            alpha = (alpha * 0.1).max(STEP_MIN);
            continue;
        }

        let f_ref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut theta = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            for i in 0..n {
                x_trial[i] = x[i] + theta * d[i];
            }
            let f_new = problem.eval(&x_trial, lambda, rho, None);
            if f_new <= f_ref + ARMIJO_C * theta * gtd {
                accepted = true;
                break;
            }
            theta *= 0.5;
        }
        if !accepted {
            // Could not descend along the projected direction.
            return iter + 1;
        }

        let f_trial = problem.eval(&x_trial, lambda, rho, Some(&mut grad_new));
        // Spectral (Barzilai-Borwein) step for the next iteration.
        let mut sts = 0.0;
        let mut sty = 0.0;
        for i in 0..n {
            let s = x_trial[i] - x[i];
            let y = grad_new[i] - grad[i];
            sts += s * s;
            sty += s * y;
        }
        alpha = if sty > 1e-300 {
            (sts / sty).clamp(STEP_MIN, STEP_MAX)
        } else {
            STEP_MAX
        };

        std::mem::swap(x, &mut x_trial);
        std::mem::swap(&mut grad, &mut grad_new);
        // Stop once accepted steps no longer move the value beyond noise.
        if (f - f_trial).abs() <= 1e-13 * f.abs().max(f64::MIN_POSITIVE) {
            plateau += 1;
        } else {
            plateau = 0;
        }
        f = f_trial;
        history[hist_pos] = f;
        hist_pos = (hist_pos + 1) % HISTORY;
    }
    max_iter
}

/// Scales all widths up by the smallest factor that makes every constraint
/// hold exactly (`score >= gamma` in IEEE comparison), so returned estimates
/// contain their training data outright.
fn inflate_to_exact_feasibility(problem: &Problem, x: &mut [f64], scratch: &mut [f64]) {
    let off = problem.widths_offset();
    let feasible = |x: &mut [f64], base: &[f64], factor: f64, scratch: &mut [f64]| -> bool {
        for i in off..base.len() {
            x[i] = base[i] * factor;
        }
        problem.constraints(x, scratch);
        scratch.iter().all(|&c| c >= 0.0)
    };

    let base = x.to_vec();
    if feasible(x, &base, 1.0, scratch) {
        return;
    }
    let mut offset = 1e-9;
    while !feasible(x, &base, 1.0 + offset, scratch) {
        offset *= 2.0;
        if offset > 1.0 {
            // Far worse than any admissible violation; leave the widths at
            // the last probe and let the caller report infeasibility.
            return;
        }
    }
    let (mut lo, mut hi) = (1.0, 1.0 + offset);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(x, &base, mid, scratch) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let final_ok = feasible(x, &base, hi, scratch);
    debug_assert!(final_ok);
}

/// Centroid and max-radius spread of the samples; solving in normalized
/// coordinates keeps the tolerances meaningful at any data scale and makes
/// the solution translation- and scale-equivariant.
fn normalization(samples: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let dim = samples[0].len();
    let mut centroid = vec![0.0; dim];
    for s in samples {
        for (c, v) in centroid.iter_mut().zip(s) {
            *c += v;
        }
    }
    for c in centroid.iter_mut() {
        *c /= samples.len() as f64;
    }
    let mut radius = 0.0f64;
    for s in samples {
        let r = s
            .iter()
            .zip(&centroid)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        radius = radius.max(r);
    }
    if !(radius.is_finite() && radius > 0.0) {
        radius = 1.0;
    }
    (centroid, radius)
}

pub(super) fn solve(
    samples: &[Vec<f64>],
    threshold: f64,
    opts: &FitOptions,
    wobj: WidthObjective,
    init: &Initialization,
) -> Result<(RbfEstimate, FitReport)> {
    let dim = samples[0].len();
    let m = init.centers.len();

    let (centroid, scale) = normalization(samples);
    let normalized: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            s.iter()
                .zip(&centroid)
                .map(|(v, c)| (v - c) / scale)
                .collect()
        })
        .collect();
    let problem = Problem {
        samples: &normalized,
        dim,
        m,
        gamma: threshold,
        sigma_min: opts.sigma_min / scale,
        wobj: WidthObjective {
            quad: wobj.quad,
            lin: wobj.lin / scale,
        },
    };

    let mut x = Vec::with_capacity(problem.n_vars());
    for c in &init.centers {
        for (v, o) in c.iter().zip(&centroid) {
            x.push((v - o) / scale);
        }
    }
    for w in &init.widths {
        x.push(w / scale);
    }
    problem.project(&mut x);

    let mut lambda = vec![0.0f64; samples.len()];
    let mut c_scratch = vec![0.0f64; samples.len()];
    let mut iterations = 0u64;
    let mut converged = false;

    // Best feasible iterate seen, by width objective.
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |x: &[f64], violation: f64, best: &mut Option<(Vec<f64>, f64)>| {
        if violation <= opts.feasibility_tol {
            let obj = problem.width_objective(x);
            if best.as_ref().is_none_or(|(_, b)| obj < *b) {
                *best = Some((x.to_vec(), obj));
            }
        }
    };

    let init_violation = problem.max_violation(&x, &mut c_scratch);
    consider(&x, init_violation, &mut best);

    // Warm-restart cycles: each cycle re-escalates rho from scratch, which
    // lets the iterate take a fresh descent pass through the boundary
    // instead of stalling on an ill-conditioned high-rho subproblem.
    let mut cycle_objective_prev = f64::INFINITY;
    'cycles: for _cycle in 0..MAX_CYCLES {
        lambda.fill(0.0);
        let mut rho = RHO_INITIAL;
        let mut objective_prev = f64::INFINITY;

        for outer in 0..opts.max_outer {
            let tol = (1e-2 * 0.3f64.powi(outer as i32)).max(1e-9);
            iterations += inner_solve(&problem, &mut x, &lambda, rho, tol, opts.max_inner) as u64;

            problem.constraints(&x, &mut c_scratch);
            let violation = c_scratch.iter().fold(0.0f64, |acc, &c| acc.max(-c));
            consider(&x, violation, &mut best);

            let objective = problem.width_objective(&x);
            let settled = (objective - objective_prev).abs()
                <= opts.objective_rel_tol * objective.abs().max(f64::MIN_POSITIVE);
            if violation <= opts.feasibility_tol && settled {
                break;
            }
            objective_prev = objective;

            for (l, &c) in lambda.iter_mut().zip(&c_scratch) {
                *l = (*l - rho * c).max(0.0);
            }
            rho = (rho * RHO_GROWTH).min(RHO_MAX);
        }

        let cycle_objective = problem.width_objective(&x);
        if (cycle_objective_prev - cycle_objective).abs()
            <= opts.objective_rel_tol.max(1e-10) * cycle_objective.abs().max(f64::MIN_POSITIVE)
        {
            converged = true;
            break 'cycles;
        }
        cycle_objective_prev = cycle_objective;
    }

    // Fall back to the best feasible iterate if the final one is worse or
    // infeasible.
    let final_violation = problem.max_violation(&x, &mut c_scratch);
    let final_obj = problem.width_objective(&x);
    let x = match best {
        Some((bx, bobj)) if final_violation > opts.feasibility_tol || bobj < final_obj => bx,
        _ => x,
    };

    // Back to original units; the exactness polish below runs against the
    // raw samples so the returned estimate contains them outright.
    let off = problem.widths_offset();
    let mut x_orig = Vec::with_capacity(x.len());
    for i in 0..m {
        for (v, c) in x[i * dim..(i + 1) * dim].iter().zip(&centroid) {
            x_orig.push(v * scale + c);
        }
    }
    for w in &x[off..] {
        x_orig.push((w * scale).max(opts.sigma_min));
    }
    let original = Problem {
        samples,
        dim,
        m,
        gamma: threshold,
        sigma_min: opts.sigma_min,
        wobj,
    };
    let mut violation = original.max_violation(&x_orig, &mut c_scratch);
    if violation <= opts.feasibility_tol {
        inflate_to_exact_feasibility(&original, &mut x_orig, &mut c_scratch);
        violation = original.max_violation(&x_orig, &mut c_scratch);
    }

    let report = FitReport {
        objective: original.volume_objective(&x_orig),
        constraint_violation: violation,
        iterations,
        converged: converged && violation <= opts.feasibility_tol,
    };
    if violation > opts.feasibility_tol {
        return Err(Error::InfeasibleFit { report });
    }

    let centers: Vec<Vec<f64>> = (0..m)
        .map(|i| x_orig[i * dim..(i + 1) * dim].to_vec())
        .collect();
    let widths = x_orig[off..].to_vec();
    let estimate = RbfEstimate::new(centers, widths, threshold)?;
    Ok((estimate, report))
}
