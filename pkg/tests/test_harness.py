"""Coupled Monte Carlo experiment driver: counts, coupling, and invariances."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

import oracles
from gridstorage.errors import ConfigError
from gridstorage.harness import (
    ComparisonRow,
    EstimateWithCI,
    ExperimentConfig,
    estimate_probabilities,
    ratio_trend,
)
from gridstorage.processes import fbm_spec
from gridstorage.simulate import IncrementSampler, RngStream, required_horizon
from gridstorage.storage import window_index, window_statistics

BM = fbm_spec(0.5, 1.0)


# ---------------------------------------------------------------------------
# estimate arithmetic and configuration guards


def test_estimate_from_counts():
    est = EstimateWithCI.from_counts(250, 10, 1000)
    assert est.p_hat == 0.25
    assert est.se == pytest.approx(math.sqrt(0.25 * 0.75 / 1000), rel=1e-12)
    assert est.ci95 == (pytest.approx(0.25 - 1.96 * est.se), pytest.approx(0.25 + 1.96 * est.se))
    assert est.exceed_count == 250 and est.truncated_exceed_count == 10


def test_zero_count_uses_rule_of_three():
    est = EstimateWithCI.from_counts(0, 0, 500)
    assert est.p_hat == 0.0 and est.se == 0.0
    assert est.ci95 == (0.0, 3.0 / 500)


def test_config_validation():
    ok = dict(spec=BM, delta=0.1, T=0.0, u_list=(1.0, 2.0), reps=100)
    ExperimentConfig(**ok)
    for bad in (
        {"u_list": (2.0, 1.0)},
        {"u_list": (-1.0, 2.0)},
        {"u_list": ()},
        {"reps": 0},
        {"T": -0.1},
        {"delta": 0.0},
        {"workers": 0},
        {"block_size": 0},
    ):
        with pytest.raises(ConfigError):
            ExperimentConfig(**{**ok, **bad})


# ---------------------------------------------------------------------------
# cross-sampler agreement on a tiny grid


def test_matches_dense_covariance_reference():
    # ten grid points: small enough to brute-force from the dense covariance
    # with an unrelated generator (PCG64 on path values vs Philox on increments)
    spec = fbm_spec(0.7, 1.0)
    delta, T, u = 0.25, 0.5, 0.8
    grid = required_horizon(spec, u, delta, safety=1.0, window_T=T)
    assert grid.horizon_n == 10
    ref_p, ref_se = oracles.mvn_storage_reference(
        spec.variance.eval, 1.0, delta, grid.horizon_n, window_index(T, delta), u, 2_000_000, 77
    )
    cfg = ExperimentConfig(spec=spec, delta=delta, T=T, u_list=(u,), reps=400_000, safety=1.0)
    mc = estimate_probabilities(cfg)[0].mc
    for i, kind in enumerate(("point", "sup", "inf")):
        gap = abs(mc[kind].p_hat - ref_p[i])
        assert gap <= 5.0 * math.hypot(mc[kind].se, ref_se[i]), (kind, mc[kind].p_hat, ref_p[i])
    assert mc["inf"].p_hat <= mc["point"].p_hat <= mc["sup"].p_hat


def test_origin_atom_matches_reflected_walk():
    # P(Q(0) > 0) for Brownian input is the complement of the reflected walk's
    # atom at zero (steps N(-c delta, delta)); the horizon is long enough that
    # the remaining tail mass is negligible at this tolerance
    st = oracles.walk_max_evolution(
        mu=-0.1, sd=math.sqrt(0.1), n_steps=50, dx=0.002, x_max=8.0, checkpoints=[50]
    )[-1]
    p_dp = 1.0 - st.atom
    assert p_dp == pytest.approx(0.6262620682763418, abs=1e-4)
    sampler = IncrementSampler(lambda t: np.asarray(t, dtype=float), 0.1, 50)
    vals = sampler.sample_paths(RngStream(9, 0).generator(), 40_000)
    drifted = vals - np.arange(51) * 0.1
    q0 = window_statistics(drifted, 0)[0]
    p_hat = float((q0 > 0).mean())
    se = math.sqrt(p_hat * (1.0 - p_hat) / 40_000)
    assert p_hat < 1.0
    assert abs(p_hat - p_dp) <= 4.0 * se


# ---------------------------------------------------------------------------
# horizon truncation bookkeeping


def test_truncation_rare_and_safety_insensitive():
    runs = {}
    for safety, seed in ((3.0, 31), (5.0, 32)):
        cfg = ExperimentConfig(
            spec=BM, delta=0.05, T=0.0, u_list=(1.0,), reps=40_000, root_seed=seed, safety=safety
        )
        runs[safety] = estimate_probabilities(cfg)[0].mc["sup"]
    a, b = runs[3.0], runs[5.0]
    assert a.truncated_exceed_count <= 0.05 * a.exceed_count
    assert b.truncated_exceed_count < a.truncated_exceed_count  # longer horizon, fewer flags
    assert abs(a.p_hat - b.p_hat) <= 4.0 * math.hypot(a.se, b.se)


# ---------------------------------------------------------------------------
# grid refinement on a shared path


def test_coarse_grid_statistics_are_dominated():
    # thinning a path can only shrink inner maxima: the coarse origin value and
    # window supremum never exceed the fine ones computed from the same draw
    sampler = IncrementSampler(lambda t: np.asarray(t, dtype=float), 0.05, 40)
    vals = sampler.sample_paths(RngStream(17, 0).generator(), 256)
    fine = vals - np.arange(41) * 0.05
    coarse = fine[:, ::2]
    q0_f, sup_f, _, _ = window_statistics(fine, window_index(0.2, 0.05))
    q0_c, sup_c, _, _ = window_statistics(coarse, window_index(0.2, 0.1))
    assert np.all(q0_c <= q0_f)
    assert np.all(sup_c <= sup_f)


# ---------------------------------------------------------------------------
# determinism and worker invariance


def _counts(rows):
    return [
        (row.mc[k].exceed_count, row.mc[k].truncated_exceed_count)
        for row in rows
        for k in ("point", "sup", "inf")
    ]


def test_counts_invariant_under_worker_count_and_rerun():
    base = dict(
        spec=BM, delta=0.1, T=0.1, u_list=(0.5, 1.0), reps=4000, root_seed=3, block_size=512
    )
    one = estimate_probabilities(ExperimentConfig(**base, workers=1))
    two = estimate_probabilities(ExperimentConfig(**base, workers=2))
    again = estimate_probabilities(ExperimentConfig(**base, workers=1))
    assert _counts(one) == _counts(two) == _counts(again)


# ---------------------------------------------------------------------------
# ratio trend diagnostic


def _fake_rows(ratios, reps=100_000):
    rows = []
    for i, r in enumerate(ratios):
        est = EstimateWithCI.from_counts(int(r * reps * 0.5), 0, reps)
        rows.append(
            ComparisonRow(
                u=float(i + 1),
                mc={"point": est},
                asy={"point": SimpleNamespace(value=0.5)},
                ratio={"point": r},
            )
        )
    return rows


def test_ratio_trend_flags_growing_error():
    out = ratio_trend(_fake_rows([1.0, 1.05, 1.2]), kind="point")
    assert out["drift"] is True
    assert [row["ratio"] for row in out["rows"]] == [1.0, 1.05, 1.2]


def test_ratio_trend_accepts_flat_ratios():
    assert ratio_trend(_fake_rows([1.01, 1.0, 0.99]), kind="point")["drift"] is False


def test_ratio_trend_validation():
    with pytest.raises(ConfigError):
        ratio_trend(_fake_rows([1.0, 1.0]), kind="point")
    with pytest.raises(ConfigError):
        ratio_trend(_fake_rows([1.0, 1.0, 1.0]), kind="median")
