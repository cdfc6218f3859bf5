//! Classical fourth-order Runge-Kutta on a fixed grid.

use crate::error::{Error, Result};

use super::{SystemModel, Trajectory};

struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

fn rk4_step(model: &SystemModel, t: f64, x: &mut [f64], u: &[f64], h: f64, s: &mut Rk4Scratch) {
    let shift = |tmp: &mut [f64], x: &[f64], k: &[f64], scale: f64| {
        for ((t, &xi), &ki) in tmp.iter_mut().zip(x).zip(k) {
            *t = xi + scale * ki;
        }
    };
    model.vector_field(t, x, u, &mut s.k1);
    shift(&mut s.tmp, x, &s.k1, 0.5 * h);
    model.vector_field(t + 0.5 * h, &s.tmp, u, &mut s.k2);
    shift(&mut s.tmp, x, &s.k2, 0.5 * h);
    model.vector_field(t + 0.5 * h, &s.tmp, u, &mut s.k3);
    shift(&mut s.tmp, x, &s.k3, h);
    model.vector_field(t + h, &s.tmp, u, &mut s.k4);
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += h / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

fn check_inputs(model: &SystemModel, x0: &[f64], u: &[f64], t0: f64, t1: f64, step: f64) -> Result<()> {
    if x0.len() != model.state_dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dimension(),
            got: x0.len(),
        });
    }
    if u.len() != model.disturbance_dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.disturbance_dimension(),
            got: u.len(),
        });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::OutOfRange {
            name: "step",
            value: step,
            range: "(0, inf)",
        });
    }
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(Error::OutOfRange {
            name: "t1 - t0",
            value: t1 - t0,
            range: "[0, inf)",
        });
    }
    Ok(())
}

fn check_finite(x: &[f64], t: f64) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationDiverged {
            time: t,
            sample: None,
        });
    }
    Ok(())
}

/// Splits `[t0, t1]` into whole steps of `step` plus a shortened final step
/// so the last grid point lands exactly on `t1`.
fn step_plan(t0: f64, t1: f64, step: f64) -> (u64, f64) {
    let span = t1 - t0;
    let whole = (span / step).floor() as u64;
    let rem = span - whole as f64 * step;
    if rem <= step * 1e-9 {
        (whole, 0.0)
    } else {
        (whole, rem)
    }
}

/// Integrates and returns the full trajectory, one state per grid point.
/// The disturbance `u` is held constant over `[t0, t1]`.
pub fn integrate(
    model: &SystemModel,
    x0: &[f64],
    u: &[f64],
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<Trajectory> {
    check_inputs(model, x0, u, t0, t1, step)?;
    if t1 == t0 {
        return Trajectory::new(vec![t0], vec![x0.to_vec()]);
    }

    let (whole, rem) = step_plan(t0, t1, step);
    let mut scratch = Rk4Scratch::new(x0.len());
    let mut x = x0.to_vec();
    let mut times = Vec::with_capacity(whole as usize + 2);
    let mut states = Vec::with_capacity(whole as usize + 2);
    times.push(t0);
    states.push(x.clone());

    for i in 0..whole {
        let t = t0 + i as f64 * step;
        rk4_step(model, t, &mut x, u, step, &mut scratch);
        let t_next = if rem == 0.0 && i + 1 == whole {
            t1
        } else {
            t0 + (i + 1) as f64 * step
        };
        check_finite(&x, t_next)?;
        times.push(t_next);
        states.push(x.clone());
    }
    if rem > 0.0 {
        rk4_step(model, t0 + whole as f64 * step, &mut x, u, rem, &mut scratch);
        check_finite(&x, t1)?;
        times.push(t1);
        states.push(x);
    }
    Trajectory::new(times, states)
}

/// Integrates and returns only the terminal state.
pub fn integrate_terminal(
    model: &SystemModel,
    x0: &[f64],
    u: &[f64],
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<Vec<f64>> {
    check_inputs(model, x0, u, t0, t1, step)?;
    if t1 == t0 {
        return Ok(x0.to_vec());
    }
    let (whole, rem) = step_plan(t0, t1, step);
    let mut scratch = Rk4Scratch::new(x0.len());
    let mut x = x0.to_vec();
    for i in 0..whole {
        let t = t0 + i as f64 * step;
        rk4_step(model, t, &mut x, u, step, &mut scratch);
        check_finite(&x, t + step)?;
    }
    if rem > 0.0 {
        rk4_step(model, t0 + whole as f64 * step, &mut x, u, rem, &mut scratch);
        check_finite(&x, t1)?;
    }
    Ok(x)
}

/// Integrates across `grid`, recording states only at the grid instants.
/// Interior sub-steps never exceed `step`.
pub fn integrate_on_grid(
    model: &SystemModel,
    x0: &[f64],
    u: &[f64],
    grid: &[f64],
    step: f64,
) -> Result<Trajectory> {
    if grid.is_empty() {
        return Err(Error::GridMismatch);
    }
    check_inputs(model, x0, u, grid[0], *grid.last().unwrap(), step)?;
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::GridMismatch);
    }

    let mut scratch = Rk4Scratch::new(x0.len());
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity(grid.len());
    states.push(x.clone());
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let substeps = ((b - a) / step).ceil().max(1.0) as u64;
        let h = (b - a) / substeps as f64;
        for j in 0..substeps {
            rk4_step(model, a + j as f64 * h, &mut x, u, h, &mut scratch);
        }
        check_finite(&x, b)?;
        states.push(x.clone());
    }
    Trajectory::new(grid.to_vec(), states)
}
