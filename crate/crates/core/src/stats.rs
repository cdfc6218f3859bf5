//! Binomial tail arithmetic and a-posteriori probabilistic certificates.
//!
//! The holdout certificate inverts the binomial CDF: given `k` observed
//! violations out of `M` fresh samples and a confidence `beta`, it returns the
//! largest violation rate `e` with `Bin(k, M, e) >= beta`. The CDF is
//! evaluated in log space (log-gamma terms, summation anchored at the largest
//! term) so sizes up to 10^6 stay stable, and the inversion uses bisection,
//! which converges unconditionally because `e -> Bin(k, M, e)` is
//! monotonically decreasing on [0, 1].

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Absolute tolerance of the bisection in [`binomial_tail_inversion`].
pub const INVERSION_TOL: f64 = 1e-10;

/// An `(k, M, beta, epsilon)` tuple: with probability at least `1 - beta`
/// over the holdout draw, the true violation probability of the certified
/// set is at most `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldoutCertificate {
    pub violations: u64,
    pub holdout_size: u64,
    pub confidence: f64,
    pub epsilon: f64,
}

/// A-posteriori bound of the wait-and-judge scenario baseline, driven by the
/// observed support-scenario count instead of a holdout set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitAndJudgeCertificate {
    pub support_count: u64,
    pub dataset_size: u64,
    pub confidence: f64,
    pub epsilon: f64,
}

fn check_counts(k: u64, m: u64) -> Result<()> {
    if k > m {
        return Err(Error::ViolationsExceedSamples {
            violations: k,
            samples: m,
        });
    }
    Ok(())
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
        return Err(Error::OutOfRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

fn check_open_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && 0.0 < value && value < 1.0) {
        return Err(Error::OutOfRange {
            name,
            value,
            range: "(0, 1)",
        });
    }
    Ok(())
}

fn check_positive_count(name: &'static str, value: u64) -> Result<()> {
    if value == 0 {
        return Err(Error::OutOfRange {
            name,
            value: 0.0,
            range: "[1, inf)",
        });
    }
    Ok(())
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// P(X <= k) for X ~ Binomial(m, e).
///
/// Terms are accumulated relative to the largest one, walking outward from
/// the (truncated) mode, so the sum neither overflows nor loses the head of
/// the distribution to underflow.
pub fn binomial_cdf(k: u64, m: u64, e: f64) -> Result<f64> {
    check_counts(k, m)?;
    check_unit_interval("e", e)?;
    if k == m || e == 0.0 {
        return Ok(1.0);
    }
    if e == 1.0 {
        // k < m: the all-violations outcome is excluded.
        return Ok(0.0);
    }

    let ln_e = e.ln();
    let ln_q = (-e).ln_1p();
    let ln_term = |j: u64| ln_choose(m, j) + j as f64 * ln_e + (m - j) as f64 * ln_q;

    // Largest term inside the summation range.
    let mode = (((m + 1) as f64) * e).floor() as u64;
    let peak = mode.min(k);
    let ln_peak = ln_term(peak);

    // term(j+1)/term(j) in log space.
    let step_up = |j: u64| ((m - j) as f64 / (j + 1) as f64).ln() + ln_e - ln_q;

    let mut total = 1.0; // the peak term, rescaled to 1
    let mut rel = 0.0f64; // log of current term relative to the peak
    for j in (0..peak).rev() {
        rel -= step_up(j);
        let t = rel.exp();
        total += t;
        if t < 1e-30 {
            break;
        }
    }
    rel = 0.0;
    for j in peak..k {
        rel += step_up(j);
        let t = rel.exp();
        total += t;
        if t < 1e-30 {
            break;
        }
    }

    Ok((ln_peak + total.ln()).exp().clamp(0.0, 1.0))
}

/// Largest `e` in [0, 1] with `Bin(k, M, e) >= beta` (binomial tail
/// inversion), to absolute tolerance [`INVERSION_TOL`].
pub fn binomial_tail_inversion(k: u64, m: u64, beta: f64) -> Result<f64> {
    check_counts(k, m)?;
    check_open_unit_interval("beta", beta)?;
    check_positive_count("M", m)?;
    if k == m {
        // Bin(M, M, e) = 1 >= beta for every e.
        return Ok(1.0);
    }

    // Invariant: cdf(lo) >= beta > cdf(hi).
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > INVERSION_TOL {
        let mid = 0.5 * (lo + hi);
        if binomial_cdf(k, m, mid)? >= beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Packages `(k, M, beta)` with the inverted bound.
pub fn holdout_certificate(k: u64, m: u64, beta: f64) -> Result<HoldoutCertificate> {
    let epsilon = binomial_tail_inversion(k, m, beta)?;
    Ok(HoldoutCertificate {
        violations: k,
        holdout_size: m,
        confidence: beta,
        epsilon,
    })
}

/// Closed-form `ln(1/beta)/M` upper bound on the zero-violation inversion,
/// clipped to 1. Natural logarithm, which makes the bound dominate
/// `1 - beta^(1/M)` exactly.
pub fn fast_rate_bound(m: u64, beta: f64) -> Result<f64> {
    check_positive_count("M", m)?;
    check_open_unit_interval("beta", beta)?;
    Ok((beta.recip().ln() / m as f64).min(1.0))
}

/// `k/M + sqrt(ln(1/beta) / (2M))`, the central-limit-theorem scaling of the
/// inversion, clipped to 1. Diagnostic only; never the certificate.
pub fn clt_scale_bound(k: u64, m: u64, beta: f64) -> Result<f64> {
    check_counts(k, m)?;
    check_positive_count("M", m)?;
    check_open_unit_interval("beta", beta)?;
    let m_f = m as f64;
    Ok((k as f64 / m_f + (beta.recip().ln() / (2.0 * m_f)).sqrt()).min(1.0))
}

/// A-posteriori epsilon of the nonconvex scenario bound given `s` support
/// scenarios out of `N`: `1 - ((beta/N) / C(N,s))^(1/(N-s))`, computed in log
/// space; 1 when every scenario is a support scenario.
pub fn wait_and_judge_epsilon(s: u64, n: u64, beta: f64) -> Result<f64> {
    check_positive_count("N", n)?;
    check_open_unit_interval("beta", beta)?;
    if s > n {
        return Err(Error::ViolationsExceedSamples {
            violations: s,
            samples: n,
        });
    }
    if s == n {
        return Ok(1.0);
    }
    let ln_base = beta.ln() - (n as f64).ln() - ln_choose(n, s);
    let ln_root = ln_base / (n - s) as f64;
    Ok((-ln_root.exp_m1()).clamp(0.0, 1.0))
}

/// Packages `(s, N, beta)` with the wait-and-judge bound.
pub fn wait_and_judge_certificate(s: u64, n: u64, beta: f64) -> Result<WaitAndJudgeCertificate> {
    let epsilon = wait_and_judge_epsilon(s, n, beta)?;
    Ok(WaitAndJudgeCertificate {
        support_count: s,
        dataset_size: n,
        confidence: beta,
        epsilon,
    })
}

/// Observed violation fraction `violations / M`.
pub fn empirical_error(violations: u64, m: u64) -> Result<f64> {
    check_positive_count("M", m)?;
    check_counts(violations, m)?;
    Ok(violations as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: direct summation with exact binomial coefficients,
    /// valid for small M.
    fn naive_cdf(k: u64, m: u64, e: f64) -> f64 {
        let mut choose = 1.0f64;
        let mut sum = 0.0;
        for j in 0..=k {
            if j > 0 {
                choose *= (m - j + 1) as f64 / j as f64;
            }
            sum += choose * e.powi(j as i32) * (1.0 - e).powi((m - j) as i32);
        }
        sum
    }

    /// Independent oracle: bisection against the naive CDF.
    fn naive_inversion(k: u64, m: u64, beta: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if naive_cdf(k, m, mid) >= beta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn cdf_full_range_sums_to_one() {
        assert_eq!(binomial_cdf(5, 5, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn cdf_zero_rate_is_one() {
        assert_eq!(binomial_cdf(0, 10, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn cdf_matches_direct_summation() {
        // 1/32 + 5/32 = 0.1875
        let got = binomial_cdf(1, 5, 0.5).unwrap();
        assert!((got - 0.1875).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn cdf_matches_naive_oracle_on_grid() {
        for &(k, m) in &[(0u64, 1u64), (0, 20), (3, 20), (19, 20), (7, 55)] {
            for i in 1..20 {
                let e = i as f64 / 20.0;
                let got = binomial_cdf(k, m, e).unwrap();
                let want = naive_cdf(k, m, e);
                assert!(
                    (got - want).abs() < 1e-11,
                    "Bin({k},{m},{e}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn cdf_is_stable_for_large_m() {
        // Head of the distribution: a crude summation would underflow.
        let p = binomial_cdf(100, 1_000_000, 0.001).unwrap();
        assert!(p > 0.0 && p < 1.0);
        // Poisson(1000) CDF at 100 is astronomically small but positive.
        assert!(p < 1e-100, "p = {p}");
    }

    #[test]
    fn cdf_rejects_bad_domain() {
        assert!(binomial_cdf(6, 5, 0.3).is_err());
        assert!(binomial_cdf(1, 5, -0.1).is_err());
        assert!(binomial_cdf(1, 5, 1.1).is_err());
        assert!(binomial_cdf(1, 5, f64::NAN).is_err());
    }

    #[test]
    fn cdf_is_monotone_in_e() {
        for &(k, m) in &[(0u64, 10u64), (3, 50), (20, 200)] {
            let mut prev = f64::INFINITY;
            for i in 0..=1000 {
                let e = i as f64 / 1000.0;
                let v = binomial_cdf(k, m, e).unwrap();
                assert!(v <= prev + 1e-12, "not monotone at Bin({k},{m},{e})");
                prev = v;
            }
        }
    }

    #[test]
    fn inversion_m10_zero_violations() {
        // Reference value 0.874; analytically 1 - beta^(1/M).
        let eps = binomial_tail_inversion(0, 10, 1e-9).unwrap();
        assert!((eps - 0.8741).abs() < 1e-3, "eps = {eps}");
    }

    #[test]
    fn inversion_all_violations_is_one() {
        assert_eq!(binomial_tail_inversion(50, 50, 0.05).unwrap(), 1.0);
    }

    #[test]
    fn inversion_m50_one_violation() {
        let eps = binomial_tail_inversion(1, 50, 1e-9).unwrap();
        assert!((eps - 0.384).abs() < 1e-3, "eps = {eps}");
        let oracle = naive_inversion(1, 50, 1e-9);
        assert!((eps - oracle).abs() < 1e-9, "eps = {eps}, oracle = {oracle}");
    }

    #[test]
    fn inversion_agrees_with_naive_oracle() {
        for &(k, m, beta) in &[(0u64, 12u64, 0.05f64), (2, 30, 0.01), (10, 40, 0.5)] {
            let got = binomial_tail_inversion(k, m, beta).unwrap();
            let want = naive_inversion(k, m, beta);
            assert!(
                (got - want).abs() < 1e-8,
                "inv({k},{m},{beta}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn inversion_is_tight() {
        for &(k, m) in &[(0u64, 10u64), (1, 50), (5, 100), (50, 400)] {
            for &beta in &[1e-9, 0.01, 0.5] {
                let eps = binomial_tail_inversion(k, m, beta).unwrap();
                assert!(binomial_cdf(k, m, eps).unwrap() >= beta);
                if eps + 1e-6 <= 1.0 {
                    assert!(
                        binomial_cdf(k, m, eps + 1e-6).unwrap() < beta,
                        "inv({k},{m},{beta}) not maximal"
                    );
                }
            }
        }
    }

    #[test]
    fn inversion_closed_form_at_zero_violations() {
        for &m in &[1u64, 10, 100, 10_000] {
            for &beta in &[1e-9, 0.01, 0.5] {
                let eps = binomial_tail_inversion(0, m, beta).unwrap();
                let closed = 1.0 - beta.powf(1.0 / m as f64);
                assert!(
                    (eps - closed).abs() <= 1e-9,
                    "M={m}, beta={beta}: {eps} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn inversion_monotonicities() {
        // Non-decreasing in k.
        let mut prev = 0.0;
        for k in 0..=10 {
            let eps = binomial_tail_inversion(k, 50, 0.01).unwrap();
            assert!(eps >= prev);
            prev = eps;
        }
        // Non-increasing in M.
        let mut prev = 1.0;
        for m in [10u64, 20, 50, 100, 1000] {
            let eps = binomial_tail_inversion(2, m, 0.01).unwrap();
            assert!(eps <= prev + 1e-12);
            prev = eps;
        }
        // Non-increasing in beta.
        let mut prev = 1.0;
        for beta in [1e-9, 1e-6, 1e-3, 0.1, 0.9] {
            let eps = binomial_tail_inversion(2, 50, beta).unwrap();
            assert!(eps <= prev + 1e-12);
            prev = eps;
        }
    }

    #[test]
    fn inversion_rejects_bad_domain() {
        assert!(binomial_tail_inversion(3, 2, 0.5).is_err());
        assert!(binomial_tail_inversion(0, 10, 0.0).is_err());
        assert!(binomial_tail_inversion(0, 10, 1.0).is_err());
    }

    #[test]
    fn certificate_packages_inversion() {
        let cert = holdout_certificate(0, 2000, 1e-9).unwrap();
        let closed = 1.0 - 1e-9f64.powf(1.0 / 2000.0);
        // Closed form gives 0.0103081...; the quoted 0.010307 is truncated.
        assert!((cert.epsilon - 0.010307).abs() < 2e-6);
        assert!((cert.epsilon - closed).abs() < 1e-9);

        let cert = holdout_certificate(0, 10, 1e-9).unwrap();
        assert!((cert.epsilon - 0.874).abs() < 1e-3);

        let cert = holdout_certificate(10, 10, 0.5).unwrap();
        assert_eq!(cert.epsilon, 1.0);
    }

    #[test]
    fn fast_rate_examples() {
        let e = std::f64::consts::E;
        assert!((fast_rate_bound(1000, 1.0 / e).unwrap() - 0.001).abs() < 1e-15);
        assert!((fast_rate_bound(2000, 1e-9).unwrap() - 0.010361).abs() < 1e-6);
        assert!((fast_rate_bound(1, 0.9).unwrap() - 0.10536).abs() < 1e-5);
    }

    #[test]
    fn fast_rate_dominates_inversion() {
        for &m in &[1u64, 10, 100, 1000, 10_000] {
            for &beta in &[1e-9, 0.01, 0.5] {
                let inv = binomial_tail_inversion(0, m, beta).unwrap();
                let fast = fast_rate_bound(m, beta).unwrap();
                assert!(inv <= fast + 1e-12, "M={m}, beta={beta}");
            }
        }
    }

    #[test]
    fn clt_scale_examples() {
        // ln(1/beta) = 2M clips the square root to 1.
        let beta = (-2.0f64 * 100.0).exp();
        assert_eq!(clt_scale_bound(0, 100, beta).unwrap(), 1.0);

        let got = clt_scale_bound(20, 2000, 1e-9).unwrap();
        let want = 0.01 + (1e-9f64.recip().ln() / 4000.0).sqrt();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.0820).abs() < 1e-4);

        let got = clt_scale_bound(0, 1500, 1e-9).unwrap();
        assert!((got - 0.08312).abs() < 1e-4);
    }

    #[test]
    fn wait_and_judge_full_support_is_one() {
        assert_eq!(wait_and_judge_epsilon(7, 7, 0.1).unwrap(), 1.0);
        assert_eq!(wait_and_judge_epsilon(3000, 3000, 1e-9).unwrap(), 1.0);
    }

    #[test]
    fn wait_and_judge_zero_support_closed_form() {
        let got = wait_and_judge_epsilon(0, 3000, 1e-9).unwrap();
        let want = 1.0 - (1e-9f64 / 3000.0).powf(1.0 / 3000.0);
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.009532).abs() < 2e-6, "got {got}");
    }

    #[test]
    fn wait_and_judge_satisfies_defining_equation() {
        // (beta/N) / C(N,s) = (1 - eps)^(N - s) at s = 2, N = 100.
        let (s, n, beta) = (2u64, 100u64, 0.05f64);
        let eps = wait_and_judge_epsilon(s, n, beta).unwrap();
        let choose = (100.0 * 99.0) / 2.0;
        let lhs = (beta / n as f64) / choose;
        let rhs = (1.0 - eps).powi((n - s) as i32);
        assert!(
            (lhs - rhs).abs() <= 1e-9 * lhs.max(rhs),
            "lhs = {lhs:e}, rhs = {rhs:e}"
        );
    }

    #[test]
    fn wait_and_judge_is_monotone_in_support_count() {
        let mut prev = 0.0;
        for s in 0..=300 {
            let eps = wait_and_judge_epsilon(s, 300, 1e-9).unwrap();
            assert!(eps >= prev - 1e-12, "s = {s}");
            prev = eps;
        }
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn empirical_error_examples() {
        assert_eq!(empirical_error(1, 4).unwrap(), 0.25);
        assert_eq!(empirical_error(0, 100).unwrap(), 0.0);
        assert_eq!(empirical_error(138, 1500).unwrap(), 0.092);
        assert!(empirical_error(1, 0).is_err());
        assert!(empirical_error(5, 4).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// The inverted bound is feasible and maximal for arbitrary
            /// admissible inputs.
            #[test]
            fn inversion_is_feasible_and_maximal(
                m in 1u64..400,
                k_frac in 0.0f64..1.0,
                beta in 1e-9f64..0.999,
            ) {
                let k = ((m as f64) * k_frac) as u64;
                let eps = binomial_tail_inversion(k, m, beta).unwrap();
                prop_assert!((0.0..=1.0).contains(&eps));
                prop_assert!(binomial_cdf(k, m, eps).unwrap() >= beta);
                if k < m && eps + 1e-6 <= 1.0 {
                    prop_assert!(binomial_cdf(k, m, eps + 1e-6).unwrap() < beta);
                }
            }

            /// For confidence levels up to 1/2 the certificate dominates the
            /// empirical error: the binomial median at e = k/M is k itself,
            /// so Bin(k, M, k/M) >= 1/2 >= beta keeps k/M feasible.
            #[test]
            fn epsilon_dominates_empirical_error(
                m in 1u64..400,
                k_frac in 0.0f64..1.0,
                beta in 1e-9f64..0.5,
            ) {
                let k = ((m as f64) * k_frac) as u64;
                let cert = holdout_certificate(k, m, beta).unwrap();
                prop_assert!(cert.epsilon >= empirical_error(k, m).unwrap() - 1e-9);
            }
        }
    }
}
