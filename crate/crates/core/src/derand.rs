//! The exponential cost of de-randomizing probabilistic reachability bounds.
//!
//! A cone bump `h(x) = delta - L * |x|` on the unit ball is L-Lipschitz,
//! peaks at `delta`, and violates zero exactly on the ball of radius
//! `delta / L`, so its violation probability under the uniform ball measure
//! is the volume ratio `(delta / L)^d`. Calibrating `delta` to a target
//! violation level `eps` gives a peak of `L * eps^(1/d)`, which barely
//! shrinks as the dimension grows. Matching that, de-randomizing with only a
//! Lipschitz bound needs on the order of `(L / gamma)^d` queries.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeds::{self, labels};

/// The cone bump `h(x) = height - lipschitz * |x|` on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpInstance {
    pub dimension: usize,
    pub lipschitz: f64,
    pub height: f64,
}

impl BumpInstance {
    pub fn new(dimension: usize, lipschitz: f64, height: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::OutOfRange {
                name: "dimension",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::OutOfRange {
                name: "lipschitz",
                value: lipschitz,
                range: "(0, inf)",
            });
        }
        if !(height.is_finite() && height >= 0.0) {
            return Err(Error::OutOfRange {
                name: "height",
                value: height,
                range: "[0, inf)",
            });
        }
        Ok(Self {
            dimension,
            lipschitz,
            height,
        })
    }

    /// `height - lipschitz * |x|`; `x` must have length `dimension`.
    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dimension, "bump input dimension");
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.height - self.lipschitz * norm
    }

    /// Exact `P{h(x) > 0}` under the uniform ball measure: the ball-volume
    /// ratio `(height / lipschitz)^d`, clipped to 1.
    pub fn violation_probability(&self) -> f64 {
        (self.height / self.lipschitz)
            .min(1.0)
            .powi(self.dimension as i32)
    }

    /// Monte Carlo estimate of the violation probability from `n` uniform
    /// ball samples.
    pub fn mc_violation_estimate(&self, n: u64, seed: u64) -> f64 {
        assert!(n >= 1);
        let mut hits = 0u64;
        let mut x = vec![0.0; self.dimension];
        for index in 0..n {
            let mut rng = seeds::stream_rng(seed, labels::BALL, index);
            unit_ball_point(self.dimension, &mut rng, &mut x);
            if self.value(&x) > 0.0 {
                hits += 1;
            }
        }
        hits as f64 / n as f64
    }
}

/// The height at which the bump's violation probability equals `epsilon`:
/// `delta* = L * epsilon^(1/d)`.
pub fn calibrate_delta(lipschitz: f64, dimension: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && 0.0 < epsilon && epsilon <= 1.0) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: epsilon,
            range: "(0, 1]",
        });
    }
    // Reuse the constructor's L and d validation.
    BumpInstance::new(dimension, lipschitz, 0.0)?;
    Ok(lipschitz * epsilon.powf(1.0 / dimension as f64))
}

fn unit_ball_point<R: Rng>(dimension: usize, rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm_sq = 0.0;
        for v in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *v = g;
            norm_sq += g * g;
        }
        if norm_sq > 0.0 {
            let radius: f64 = rng.random::<f64>().powf(1.0 / dimension as f64);
            let scale = radius / norm_sq.sqrt();
            for v in out.iter_mut() {
                *v *= scale;
            }
            return;
        }
    }
}

/// `n` i.i.d. uniform points in the closed unit Euclidean ball: an isotropic
/// Gaussian direction with radius `U^(1/d)`.
pub fn sample_unit_ball(dimension: usize, n: u64, seed: u64) -> Vec<Vec<f64>> {
    assert!(dimension >= 1 && n >= 1);
    let mut out = Vec::with_capacity(n as usize);
    let mut x = vec![0.0; dimension];
    for index in 0..n {
        let mut rng = seeds::stream_rng(seed, labels::BALL, index);
        unit_ball_point(dimension, &mut rng, &mut x);
        out.push(x.clone());
    }
    out
}

/// Values above this saturate in [`QueryBound`].
pub const QUERY_BOUND_SATURATION: u64 = u32::MAX as u64;

/// A query count that may exceed any sensible integer range; saturated
/// values carry their exact base-10 logarithm instead.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum QueryBound {
    Exact(u64),
    Saturated { log10: f64 },
}

impl QueryBound {
    pub fn log10(&self) -> f64 {
        match self {
            QueryBound::Exact(v) => (*v as f64).log10(),
            QueryBound::Saturated { log10 } => *log10,
        }
    }
}

impl std::fmt::Display for QueryBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QueryBound::Exact(v) => write!(f, "{v}"),
            QueryBound::Saturated { log10 } => write!(f, "10^{log10}"),
        }
    }
}

/// `ceil((L / gamma)^d)` queries needed by any zeroth-order scheme to certify
/// `gamma`-suboptimality under an L-Lipschitz assumption alone.
pub fn zeroth_order_query_lower_bound(
    lipschitz: f64,
    gamma: f64,
    dimension: usize,
) -> Result<QueryBound> {
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(Error::OutOfRange {
            name: "lipschitz",
            value: lipschitz,
            range: "(0, inf)",
        });
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::OutOfRange {
            name: "gamma",
            value: gamma,
            range: "(0, inf)",
        });
    }
    if dimension == 0 {
        return Err(Error::OutOfRange {
            name: "dimension",
            value: 0.0,
            range: "[1, inf)",
        });
    }

    let ratio = lipschitz / gamma;
    let log10 = dimension as f64 * ratio.log10();
    if log10 > (QUERY_BOUND_SATURATION as f64).log10() {
        return Ok(QueryBound::Saturated { log10 });
    }
    let value = ratio.powi(dimension as i32);
    // Snap near-integers before taking the ceiling.
    let rounded = value.round();
    let count = if (value - rounded).abs() <= 1e-9 * value.abs().max(1.0) {
        rounded
    } else {
        value.ceil()
    };
    Ok(QueryBound::Exact(count.max(1.0) as u64))
}

/// Sample-count reading of the same bound: with the holdout level falling as
/// `1/M`, at least `(L / gamma)^d` samples are needed before the calibrated
/// bump's peak drops to `gamma`.
pub fn holdout_sample_lower_bound(
    lipschitz: f64,
    gamma: f64,
    dimension: usize,
) -> Result<QueryBound> {
    zeroth_order_query_lower_bound(lipschitz, gamma, dimension)
}
