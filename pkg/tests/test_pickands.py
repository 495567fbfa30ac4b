"""Monte Carlo window functionals against exact two-point and random-walk answers."""

import math

import numpy as np
import pytest

import oracles
from gridstorage.errors import ConfigError, RateNotConvergedError
from gridstorage.pickands import (
    LabProcess,
    estimate_G_window,
    estimate_H_rate,
    estimate_H_window,
    eta_process,
    fbm_exponent,
    sample_exponent_field,
    sample_window_functional,
    window_covariance,
)
from gridstorage.processes import classify_regime, fbm_spec, integrated_srd_spec, exponential_kernel

BM = fbm_exponent(0.5)


def _close(est, target, n_se):
    assert est.std_error > 0
    assert abs(est.value - target) <= n_se * est.std_error, (
        f"{est.value} vs {target} (SE {est.std_error})"
    )


# ---------------------------------------------------------------------------
# degenerate and two-point windows have exact answers


def test_single_point_window_is_exactly_one():
    for fn in (estimate_H_window, estimate_G_window):
        est = fn(BM, np.array([0.0]), reps=128, rng=1)
        assert est.value == 1.0 and est.std_error == 0.0


def test_two_point_window_max_matches_closed_form():
    xi = fbm_exponent(0.7)
    v = float(xi.variance(0.7))
    est = estimate_H_window(xi, np.array([0.0, 0.7]), reps=200_000, rng=13)
    _close(est, oracles.two_point_H(v), 4.0)


def test_two_point_window_min_matches_closed_form():
    xi = fbm_exponent(0.35)
    v = float(xi.variance(0.7))
    est = estimate_G_window(xi, np.array([0.0, 0.7]), reps=150_000, rng=14)
    _close(est, oracles.two_point_G(v), 4.0)


# ---------------------------------------------------------------------------
# structural properties of the sampled functional


def test_window_covariance_diagonal_is_variance():
    M = np.array([0.0, 0.3, 1.1, 2.0])
    cov = window_covariance(fbm_exponent(0.6), M)
    assert np.array_equal(np.diag(cov), fbm_exponent(0.6).variance(M))
    assert np.allclose(cov, cov.T)


def test_functional_respects_window_nesting_per_replication():
    # one draw on the fine window; the coarse window's max/min are column restrictions
    M2 = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    sub = [0, 2, 4]  # = (0, 0.5, 1.0)
    _, e = sample_exponent_field(BM, M2, reps=4096, rng=7)
    assert e.shape == (4096, 5)
    assert np.all(e[:, 0] == 0.0)
    assert np.all(e[:, sub].max(axis=1) <= e.max(axis=1))
    assert np.all(e[:, sub].min(axis=1) >= e.min(axis=1))


def test_per_replication_bounds_with_origin_in_window():
    M = np.array([0.0, 0.5, 1.0])
    h = sample_window_functional(BM, M, reps=2048, rng=3, kind="H_window")
    g = sample_window_functional(BM, M, reps=2048, rng=3, kind="G_window")
    assert np.all(h >= 1.0) and np.all(g <= 1.0) and np.all(g > 0.0)


# ---------------------------------------------------------------------------
# random-walk dynamic-programming cross-checks on a 21-point window


def test_window_max_mean_matches_walk_recursion():
    # tilted mass drifts upward at +delta per step, so the absorbing top needs
    # headroom well beyond the window mean (tilted tail <= 1e-9 wants x_max ~ 16)
    dp = oracles.pickands_window_means(0.1, [2.0], dx=0.0025, x_max=16.0)[2.0]
    assert dp == pytest.approx(3.0121247, abs=2e-5)  # mesh-refinement limit
    est = estimate_H_window(BM, np.arange(21) * 0.1, reps=200_000, rng=42)
    _close(est, dp, 4.0)


def test_window_min_mean_matches_walk_recursion():
    dp = oracles.pickands_min_window_means(0.1, [2.0], dx=0.0025, x_max=15.0)[2.0]
    assert dp == pytest.approx(0.1905169, abs=2e-5)
    est = estimate_G_window(BM, np.arange(21) * 0.1, reps=200_000, rng=43)
    _close(est, dp, 4.0)


# ---------------------------------------------------------------------------
# growth-rate estimation


def test_rate_trace_structure_and_walk_agreement():
    # frozen walk-recursion means of the window max at delta = 0.01
    dp_means = {2.0: 3.55002, 4.0: 5.47805, 6.0: 7.34937, 8.0: 9.20330, 10.0: 11.05056}
    est = estimate_H_rate(BM, 0.01, reps=30_000, rng=5)
    assert est.kind == "H_rate" and est.delta == 0.01 and est.S == 10.0
    assert [row[0] for row in est.trace] == [2.0, 4.0, 6.0, 8.0, 10.0]
    for S, H, H_over_S, se_over_S in est.trace:
        assert H_over_S == H / S
        assert abs(H - dp_means[S]) <= 4.0 * se_over_S * S
    levels = [row[1] for row in est.trace]
    assert all(b > a for a, b in zip(levels, levels[1:]))
    assert est.value > 0 and est.std_error > 0


def test_rate_validation_errors():
    with pytest.raises(ConfigError):
        estimate_H_rate(BM, 0.0)
    with pytest.raises(ConfigError):
        estimate_H_rate(BM, 0.01, S_grid=(1.0, 2.0), reps=1000)
    with pytest.raises(ConfigError):
        estimate_H_rate(BM, 0.01, S_grid=(1.0, 2.0, 2.005), reps=1000)
    with pytest.raises(ConfigError):
        estimate_H_rate(BM, 0.01, reps=31)


def test_rate_raises_when_slopes_have_not_settled():
    # bounded-variance exponent: H([0,S]) saturates, so successive slopes keep shrinking
    xi = LabProcess("ou-difference", lambda t: 1.0 - np.exp(-np.asarray(t, dtype=float)))
    with pytest.raises(RateNotConvergedError) as err:
        estimate_H_rate(xi, 0.25, S_grid=(0.5, 1.0, 2.0, 4.0), reps=50_000, rng=0)
    assert len(err.value.trace) == 4


# ---------------------------------------------------------------------------
# the local process attached to a finite-limit input


def test_eta_process_variance_and_tag():
    spec = integrated_srd_spec(exponential_kernel(2.0), c=1.5)
    regime = classify_regime(spec)
    eta = eta_process(spec, regime)
    assert eta.tag == f"eta[{spec.family}]"
    t = np.array([0.1, 1.0, 7.0])
    factor = 2.0 * 1.5**2 / regime.phi**2
    assert np.allclose(eta.variance(t), factor * spec.variance.eval(t), rtol=1e-12)


def test_eta_process_requires_finite_limit():
    for hurst in (0.25, 0.75):
        spec = fbm_spec(hurst, 1.0)
        with pytest.raises(ConfigError):
            eta_process(spec, classify_regime(spec))
