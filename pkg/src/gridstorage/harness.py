"""Coupled Monte Carlo estimation of grid storage exceedance probabilities.

One simulated path serves every exceedance level and all three statistics
(origin value, window supremum, window infimum), so the estimates are coupled:
the per-path ordering inf <= point <= sup transfers to the estimates exactly,
and ratio curves in u are smooth.

Replications are partitioned into fixed-size blocks; block i draws from the
stream (root_seed, i), and block results are integer exceedance counts, so the
totals -- and every file derived from them -- are identical for any worker
count.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .asymptotics import AsymptoticApproximation, predict_inf, predict_point, predict_sup
from .errors import ConfigError
from .processes import ProcessSpec, RegimeClass, classify_regime
from .simulate import IncrementSampler, RngStream, required_horizon
from .storage import window_index, window_statistics

KINDS = ("point", "sup", "inf")

# paths are processed in sub-chunks capped by this many floats; sub-chunking
# consumes the block's stream in the same order, so it never affects results
_CHUNK_FLOAT_BUDGET = 48_000_000


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ProcessSpec
    delta: float
    T: float
    u_list: tuple
    reps: int
    root_seed: int = 0
    safety: float = 3.0
    output_paths: str = ""
    workers: int = 1
    block_size: int = 2048
    pickands_point: Optional[float] = None
    pickands_window_sup: Optional[float] = None
    pickands_window_inf: Optional[float] = None

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        u = tuple(float(x) for x in self.u_list)
        if not u or any(x <= 0 for x in u) or any(b <= a for a, b in zip(u, u[1:])):
            raise ConfigError("u_list must be positive and strictly increasing")
        object.__setattr__(self, "u_list", u)
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.T < 0:
            raise ConfigError("T must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")


@dataclass(frozen=True)
class EstimateWithCI:
    p_hat: float
    se: float
    ci95: tuple
    reps: int
    exceed_count: int
    truncated_exceed_count: int

    @staticmethod
    def from_counts(exceed: int, truncated: int, reps: int) -> "EstimateWithCI":
        p = exceed / reps
        se = math.sqrt(p * (1.0 - p) / reps)
        if exceed == 0:
            ci = (0.0, min(3.0 / reps, 1.0))  # rule of three
        else:
            ci = (max(p - 1.96 * se, 0.0), min(p + 1.96 * se, 1.0))
        return EstimateWithCI(
            p_hat=p, se=se, ci95=ci, reps=reps, exceed_count=exceed, truncated_exceed_count=truncated
        )


@dataclass(frozen=True)
class ComparisonRow:
    u: float
    mc: dict  # kind -> EstimateWithCI
    asy: dict  # kind -> AsymptoticApproximation
    ratio: dict  # kind -> float (mc.p_hat / asy.value)


# ---------------------------------------------------------------------------
# block workers

_WORKER = {}


def _block_plan(reps: int, block_size: int):
    full, rest = divmod(reps, block_size)
    plan = [(i, block_size) for i in range(full)]
    if rest:
        plan.append((full, rest))
    return plan


def _count_block(sampler, drift_slope, j_max, u_arr, root_seed, block_index, n_paths):
    """Integer exceedance counts for one block: (3, n_u) exceed and truncated."""
    n = sampler.n
    exceed = np.zeros((3, len(u_arr)), dtype=np.int64)
    trunc = np.zeros((3, len(u_arr)), dtype=np.int64)
    gen = RngStream(root_seed, block_index).generator()
    chunk = max(1, min(n_paths, _CHUNK_FLOAT_BUDGET // (n + 1)))
    done = 0
    while done < n_paths:
        b = min(chunk, n_paths - done)
        paths = sampler.sample_paths(gen, b)
        paths -= drift_slope
        q0, sup, inf, flag = window_statistics(paths, j_max)
        if not (np.all(inf <= q0) and np.all(q0 <= sup)):
            raise AssertionError("per-path ordering inf <= point <= sup violated")
        for ki, stat in enumerate((q0, sup, inf)):
            hits = stat[:, None] > u_arr[None, :]
            exceed[ki] += hits.sum(axis=0)
            trunc[ki] += (hits & flag[:, None]).sum(axis=0)
        done += b
    return exceed, trunc


def _worker_init(sampler, drift_slope, j_max, u_arr, root_seed):
    _WORKER["args"] = (sampler, drift_slope, j_max, u_arr, root_seed)


def _worker_run(task):
    block_index, n_paths = task
    sampler, drift_slope, j_max, u_arr, root_seed = _WORKER["args"]
    return _count_block(sampler, drift_slope, j_max, u_arr, root_seed, block_index, n_paths)


def estimate_probabilities(cfg: ExperimentConfig, regime: Optional[RegimeClass] = None):
    """ComparisonRow per u: coupled MC estimates next to the analytic columns."""
    spec = cfg.spec
    regime = regime if regime is not None else classify_regime(spec)
    grid = required_horizon(spec, max(cfg.u_list), cfg.delta, safety=cfg.safety, window_T=cfg.T)
    j_max = window_index(cfg.T, cfg.delta)
    sampler = IncrementSampler(spec.variance.eval, cfg.delta, grid.horizon_n)
    drift_slope = spec.drift_c * grid.times()
    u_arr = np.asarray(cfg.u_list, dtype=float)
    plan = _block_plan(cfg.reps, cfg.block_size)

    exceed = np.zeros((3, len(u_arr)), dtype=np.int64)
    trunc = np.zeros((3, len(u_arr)), dtype=np.int64)
    if cfg.workers == 1 or len(plan) == 1:
        for block_index, n_paths in plan:
            e, t = _count_block(
                sampler, drift_slope, j_max, u_arr, cfg.root_seed, block_index, n_paths
            )
            exceed += e
            trunc += t
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(
            max_workers=cfg.workers,
            mp_context=ctx,
            initializer=_worker_init,
            initargs=(sampler, drift_slope, j_max, u_arr, cfg.root_seed),
        ) as pool:
            for e, t in pool.map(_worker_run, plan):
                exceed += e
                trunc += t

    rows = []
    for j, u in enumerate(cfg.u_list):
        mc = {
            kind: EstimateWithCI.from_counts(int(exceed[ki, j]), int(trunc[ki, j]), cfg.reps)
            for ki, kind in enumerate(KINDS)
        }
        asy = {
            "point": predict_point(spec, u, cfg.delta, pickands=cfg.pickands_point, regime=regime),
            "sup": predict_sup(
                spec,
                u,
                cfg.T,
                cfg.delta,
                pickands_window=cfg.pickands_window_sup,
                pickands_delta=cfg.pickands_point,
                regime=regime,
            ),
            "inf": predict_inf(
                spec,
                u,
                cfg.T,
                cfg.delta,
                pickands_window=cfg.pickands_window_inf,
                pickands_delta=cfg.pickands_point,
                regime=regime,
            ),
        }
        ratio = {
            kind: (mc[kind].p_hat / asy[kind].value) if asy[kind].value > 0 else math.nan
            for kind in KINDS
        }
        rows.append(ComparisonRow(u=u, mc=mc, asy=asy, ratio=ratio))
    return rows


def ratio_trend(rows_or_cfg, kind: str = "point"):
    """Per-u mc/asy ratios with a drift diagnostic.

    Flags when the last ratio sits farther from 1 than the first by more than
    two combined standard errors -- the signature of an asymptotic formula
    whose error is not yet decaying over the probed u range.
    """
    if isinstance(rows_or_cfg, ExperimentConfig):
        rows = estimate_probabilities(rows_or_cfg)
    else:
        rows = list(rows_or_cfg)
    if kind not in KINDS:
        raise ConfigError(f"unknown statistic kind: {kind}")
    if len(rows) < 3:
        raise ConfigError("ratio_trend needs at least 3 exceedance levels")
    table = []
    for row in rows:
        asy_val = row.asy[kind].value
        ratio = row.ratio[kind]
        se = row.mc[kind].se / asy_val if asy_val > 0 else math.nan
        table.append({"u": row.u, "ratio": ratio, "se": se})
    first, last = table[0], table[-1]
    sigma = math.hypot(first["se"], last["se"])
    drift = (
        math.isfinite(sigma)
        and abs(last["ratio"] - 1.0) > abs(first["ratio"] - 1.0) + 2.0 * sigma
    )
    return {"kind": kind, "rows": table, "drift": drift}
