//! Lloyd's algorithm with k-means++ seeding, used to initialize RBF centers.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds;

const MAX_ITERATIONS: usize = 50;
const INERTIA_REL_TOL: f64 = 1e-6;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Deterministic k-means centers for `m` clusters.
pub fn kmeans_init(samples: &[Vec<f64>], m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Err(Error::OutOfRange {
            name: "m",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    if m > samples.len() {
        return Err(Error::TooManyBasisFunctions {
            basis_count: m,
            samples: samples.len(),
        });
    }
    let dim = samples[0].len();
    let mut rng = seeds::stream_rng(seed, seeds::labels::KMEANS, 0);

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(m);
    centers.push(samples[rng.random_range(0..samples.len())].clone());
    let mut min_sq: Vec<f64> = samples.iter().map(|s| sq_dist(s, &centers[0])).collect();
    while centers.len() < m {
        let total: f64 = min_sq.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = samples.len() - 1;
            for (i, &d) in min_sq.iter().enumerate() {
                u -= d;
                if u <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining distances are zero (duplicated points).
            rng.random_range(0..samples.len())
        };
        centers.push(samples[next].clone());
        for (i, s) in samples.iter().enumerate() {
            min_sq[i] = min_sq[i].min(sq_dist(s, centers.last().unwrap()));
        }
    }

    // Lloyd iterations.
    let mut assignment = vec![0usize; samples.len()];
    let mut prev_inertia = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut inertia = 0.0;
        for (i, s) in samples.iter().enumerate() {
            let (mut best, mut best_d) = (0usize, f64::INFINITY);
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(s, c);
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            assignment[i] = best;
            inertia += best_d;
        }

        let mut sums = vec![vec![0.0; dim]; m];
        let mut counts = vec![0usize; m];
        for (s, &a) in samples.iter().zip(&assignment) {
            counts[a] += 1;
            for (acc, v) in sums[a].iter_mut().zip(s) {
                *acc += v;
            }
        }
        for j in 0..m {
            if counts[j] > 0 {
                for v in sums[j].iter_mut() {
                    *v /= counts[j] as f64;
                }
                centers[j] = sums[j].clone();
            }
            // Empty clusters keep their previous center.
        }

        if prev_inertia.is_finite() {
            let drop = prev_inertia - inertia;
            if drop <= INERTIA_REL_TOL * prev_inertia.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        prev_inertia = inertia;
    }
    Ok(centers)
}

/// Index of the nearest center for every sample.
pub fn assign(samples: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    samples
        .iter()
        .map(|s| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(s, c);
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}
