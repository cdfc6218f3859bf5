#!/usr/bin/env python3
"""Smoke test for the reachcert_py extension module.

Builds nothing itself: run `cargo build --release -p reachcert-py` first.
The script locates the compiled cdylib, exposes it as an importable module,
and exercises the main types and operations end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parents[1]


def import_extension():
    candidates = [
        REPO_ROOT / "target" / "release" / "libreachcert_py.so",
        REPO_ROOT / "target" / "debug" / "libreachcert_py.so",
    ]
    for built in candidates:
        if built.exists():
            staging = Path(tempfile.mkdtemp(prefix="reachcert_py_"))
            shutil.copy2(built, staging / "reachcert_py.so")
            sys.path.insert(0, str(staging))
            import reachcert_py

            return reachcert_py
    sys.exit(
        "libreachcert_py.so not found; run `cargo build --release -p reachcert-py` first"
    )


def approx(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    rc = import_extension()
    print(f"loaded reachcert_py {rc.__version__}")

    # Binomial tail arithmetic.
    approx(rc.binomial_cdf(1, 5, 0.5), 0.1875, 1e-12)
    approx(rc.binomial_tail_inversion(0, 10, 1e-9), 0.8741, 1e-3)
    cert = rc.holdout_certificate(0, 2000, 1e-9)
    approx(cert.epsilon, 1.0 - (1e-9) ** (1.0 / 2000.0), 1e-9)
    assert rc.binomial_tail_inversion(0, 100, 0.01) <= rc.fast_rate_bound(100, 0.01)
    assert rc.wait_and_judge_epsilon(5, 5, 0.1) == 1.0
    approx(rc.empirical_error(138, 1500), 0.092, 1e-15)
    print(f"certificate: {cert}")

    # Scenario simulation: linear2d terminal states match exp(A t) x0.
    states = rc.sample_scenarios("linear2d", 50, seed=7)
    assert len(states) == 50 and len(states[0]) == 2
    decay = math.exp(-0.7 * 10.0)
    for s in states:
        assert abs(s[0]) < decay * 2 and abs(s[1]) < decay * 2
    times, path = rc.integrate("linear2d", [1.0, 0.0], [], 0.0, math.pi, 1e-3)
    approx(path[-1][0], -math.exp(-0.7 * math.pi), 1e-4)
    assert times[-1] == math.pi

    # RBF fit: all training points inside, reproducible, sane volume.
    est = rc.RbfEstimate.fit(states, m=1, gamma=0.25, seed=3)
    assert est.count_violations(states) == 0
    assert all(est.contains(s) for s in states)
    again = rc.RbfEstimate.fit(states, m=1, gamma=0.25, seed=3)
    assert est.widths == again.widths and est.centers == again.centers
    assert est.volume_proxy() >= rc.SIGMA_MIN
    print(f"fit: {est}")

    # Certify on fresh holdout scenarios.
    holdout = rc.sample_scenarios("linear2d", 100, seed=8)
    k = est.count_violations(holdout)
    cert = rc.holdout_certificate(k, 100, 0.05)
    assert 0.0 < cert.epsilon <= 1.0
    print(f"holdout: k={k}, epsilon={cert.epsilon:.4f}")

    # De-randomization cost: calibrated peak barely shrinks with dimension.
    approx(rc.calibrate_delta(1.0, 1, 0.01), 0.01, 1e-12)
    assert rc.calibrate_delta(1.0, 20, 0.01) > 0.79
    p = rc.bump_violation_probability(3, 2.0, 1.0)
    approx(p, 0.125, 1e-15)
    mc = rc.mc_violation_estimate(3, 2.0, 1.0, 200_000, seed=1)
    approx(mc, p, 4 * math.sqrt(p * (1 - p) / 200_000))
    queries, log10 = rc.zeroth_order_query_lower_bound(10.0, 1.0, 6)
    assert queries == 1_000_000
    queries, log10 = rc.zeroth_order_query_lower_bound(2.0, 1.0, 40)
    assert math.isinf(queries) and abs(log10 - 40 * math.log10(2)) < 1e-9

    print("smoke test passed")


if __name__ == "__main__":
    main()
