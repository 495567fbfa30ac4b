"""Monte Carlo lab for discrete Pickands-type functionals.

For a centered Gaussian process xi with stationary increments and xi(0) = 0,
the window functionals are

    H_xi(M) = E sup_{t in M} exp(sqrt(2) xi(t) - Var xi(t))
    G_xi(M) = E inf_{t in M} exp(sqrt(2) xi(t) - Var xi(t))

and the grid rate constant is H_xi^delta = lim_{S->inf} H_xi([0,S]_delta)/S.
H([0,S]_delta) grows affinely in S (slope H^delta plus an O(1) intercept), so
the rate is estimated from the slope of the trace H(S) vs S — the plain ratio
H(S)/S at desk-scale S is still inflated by the intercept. The slope estimate
is the median of pairwise slopes, with a standard error from replication
batches and a plateau diagnostic on the last two successive slopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, PathSynthesisError, RateNotConvergedError
from .processes import ProcessSpec, RegimeClass
from .simulate import IncrementSampler, RngStream

_BLOCK = 2048
_N_BATCHES = 16


@dataclass(frozen=True)
class LabProcess:
    """A centered Gaussian process with stationary increments, for the lab."""

    tag: str
    variance: Callable[[np.ndarray], np.ndarray]  # Var xi(t), vectorized


def fbm_exponent(alpha: float, scale: float = 1.0) -> LabProcess:
    """xi = scale * B_alpha with Var xi(t) = scale^2 t^{2 alpha}."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0,1)")
    s2 = float(scale) ** 2

    def var(t):
        return s2 * np.asarray(t, dtype=float) ** (2.0 * alpha)

    tag = f"fbm(alpha={alpha:g})" if scale == 1.0 else f"fbm(alpha={alpha:g},scale={scale:g})"
    return LabProcess(tag=tag, variance=var)


def eta_process(spec: ProcessSpec, regime: RegimeClass) -> LabProcess:
    """The finite-regime local process: Var eta(t) = (2 c^2 / phi^2) sigma^2(t).

    For integrated short-range input this is the same law as c G Z / sqrt(2)
    (phi = 2/G), so one constructor covers both namings.
    """
    phi = regime.phi
    if not (0.0 < phi < math.inf):
        raise ConfigError("eta is defined for the finite-limit regime only")
    c = spec.drift_c
    factor = 2.0 * c * c / (phi * phi)
    base = spec.variance.eval

    def var(t):
        return factor * np.asarray(base(t), dtype=float)

    return LabProcess(tag=f"eta[{spec.family}]", variance=var)


@dataclass(frozen=True)
class PickandsEstimate:
    kind: str  # H_window | G_window | H_rate
    value: float
    std_error: float
    S: float
    delta: float
    reps: int
    process_tag: str
    trace: tuple = field(default_factory=tuple)  # rows (S, H, H_over_S, SE)


# ---------------------------------------------------------------------------
# covariance and sampling on a finite window


def window_covariance(xi: LabProcess, M: np.ndarray) -> np.ndarray:
    """Cov(xi(s), xi(t)) = (v(s) + v(t) - v(|s-t|)) / 2 on the points of M."""
    M = np.asarray(M, dtype=float)
    v = xi.variance(M)
    return 0.5 * (v[:, None] + v[None, :] - xi.variance(np.abs(M[:, None] - M[None, :])))


def _factor_covariance(cov: np.ndarray) -> np.ndarray:
    jitter = 0.0
    base = max(float(np.max(np.diag(cov))), 1e-300)
    for _ in range(3):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(len(cov)))
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-12 * base)
    w, vmat = np.linalg.eigh(cov)
    if w[0] < -1e-8 * max(w[-1], 0.0):
        raise PathSynthesisError(
            f"path synthesis failed: window covariance indefinite (min eig {w[0]:.3e})"
        )
    return vmat * np.sqrt(np.clip(w, 0.0, None))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng), 0).generator()


class _WindowSampler:
    """Draws exp(sqrt(2) xi - Var xi) fields on a fixed finite window."""

    def __init__(self, xi: LabProcess, M):
        M = np.sort(np.asarray(M, dtype=float))
        if M.ndim != 1 or len(M) == 0:
            raise ConfigError("window M must be a nonempty 1-d set of times")
        if len(np.unique(M)) != len(M):
            raise ConfigError("window M has duplicate points")
        self.M = M
        self.has_zero = M[0] == 0.0
        pts = M[1:] if self.has_zero else M
        self.n_random = len(pts)
        self._sampler = None
        self._chol = None
        if self.n_random:
            self.var_diag = np.asarray(xi.variance(pts), dtype=float)
            diffs = np.diff(np.concatenate([[0.0], pts])) if self.has_zero else np.diff(pts)
            regular = (
                self.has_zero
                and len(pts) > 0
                and np.all(np.abs(np.diff(M) - (M[1] - M[0])) <= 1e-12 * max(M[1] - M[0], 1e-300))
            )
            if regular:
                self._sampler = IncrementSampler(xi.variance, M[1] - M[0], len(pts))
            else:
                self._chol = _factor_covariance(window_covariance(xi, pts))

    def exponent_block(self, rng: np.random.Generator, n_paths: int) -> np.ndarray:
        """(n_paths, n_random) of sqrt(2) xi(t) - Var xi(t) at the nonzero points."""
        if not self.n_random:
            return np.empty((n_paths, 0))
        if self._sampler is not None:
            x = self._sampler.sample_paths(rng, n_paths)[:, 1:]
        else:
            x = rng.standard_normal((n_paths, self.n_random)) @ self._chol.T
        return math.sqrt(2.0) * x - self.var_diag


def sample_exponent_field(xi: LabProcess, M, reps: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """(sorted window, (reps, |M|) matrix of sqrt(2) xi(t) - Var xi(t)) for coupling tests."""
    ws = _WindowSampler(xi, M)
    gen = _as_generator(rng)
    n = len(ws.M)
    out = np.empty((reps, n))
    done = 0
    while done < reps:
        b = min(_BLOCK, reps - done)
        e = ws.exponent_block(gen, b)
        if ws.has_zero:
            out[done : done + b, 0] = 0.0
            out[done : done + b, 1:] = e
        else:
            out[done : done + b] = e
        done += b
    return ws.M, out


def sample_window_functional(
    xi: LabProcess, M, reps: int, rng, kind: str = "H_window"
) -> np.ndarray:
    """Per-replication values of the window functional (testing hook)."""
    ws = _WindowSampler(xi, M)
    gen = _as_generator(rng)
    out = np.empty(reps)
    done = 0
    while done < reps:
        b = min(_BLOCK, reps - done)
        e = ws.exponent_block(gen, b)
        if kind == "H_window":
            vals = e.max(axis=1) if e.shape[1] else np.zeros(b)
            if ws.has_zero:
                vals = np.maximum(vals, 0.0)
        else:
            vals = e.min(axis=1) if e.shape[1] else np.zeros(b)
            if ws.has_zero:
                vals = np.minimum(vals, 0.0)
        out[done : done + b] = np.exp(vals)
        done += b
    return out


def _mean_se(block_sums, block_sumsqs, n):
    total = math.fsum(block_sums)
    mean = total / n
    sumsq = math.fsum(block_sumsqs)
    var = max(sumsq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, math.sqrt(var / n)


def _estimate_window(xi, M, reps, rng, kind) -> PickandsEstimate:
    if reps < 2:
        raise ConfigError("reps must be >= 2")
    ws = _WindowSampler(xi, M)
    gen = _as_generator(rng)
    sums, sumsqs = [], []
    done = 0
    while done < reps:
        b = min(_BLOCK, reps - done)
        e = ws.exponent_block(gen, b)
        if kind == "H_window":
            vals = e.max(axis=1) if e.shape[1] else np.zeros(b)
            if ws.has_zero:
                vals = np.maximum(vals, 0.0)
        else:
            vals = e.min(axis=1) if e.shape[1] else np.zeros(b)
            if ws.has_zero:
                vals = np.minimum(vals, 0.0)
        vals = np.exp(vals)
        sums.append(math.fsum(vals))
        sumsqs.append(math.fsum(vals * vals))
        done += b
    mean, se = _mean_se(sums, sumsqs, reps)
    span = float(ws.M[-1] - ws.M[0])
    return PickandsEstimate(
        kind=kind,
        value=mean,
        std_error=se,
        S=span,
        delta=float(np.min(np.diff(ws.M))) if len(ws.M) > 1 else 0.0,
        reps=reps,
        process_tag=xi.tag,
    )


def estimate_H_window(xi: LabProcess, M, reps: int, rng) -> PickandsEstimate:
    """Sample mean of sup_{t in M} exp(sqrt(2) xi(t) - Var xi(t))."""
    return _estimate_window(xi, M, reps, rng, "H_window")


def estimate_G_window(xi: LabProcess, M, reps: int, rng) -> PickandsEstimate:
    """Sample mean of inf_{t in M} exp(sqrt(2) xi(t) - Var xi(t))."""
    return _estimate_window(xi, M, reps, rng, "G_window")


# ---------------------------------------------------------------------------
# the rate constant


def default_S_grid(delta: float) -> tuple:
    unit = max(delta, 1.0)
    return tuple(k * unit for k in (2, 4, 6, 8, 10))


def _theil_sen(S: np.ndarray, H: np.ndarray) -> float:
    slopes = [
        (H[j] - H[i]) / (S[j] - S[i]) for i in range(len(S)) for j in range(i + 1, len(S))
    ]
    return float(np.median(slopes))


def _linear_variance_step(var_fn, delta: float, n_steps: int) -> Optional[float]:
    """Var xi(k delta) == k * Var xi(delta) for all k, else None.

    Linear variance means independent exponent-walk increments, which unlocks
    the reflected-walk form of the window mean below.
    """
    k = np.arange(1, n_steps + 1, dtype=float)
    v = np.asarray(var_fn(k * delta), dtype=float)
    if v[0] <= 0 or not np.allclose(v, k * v[0], rtol=1e-9, atol=0.0):
        return None
    return float(v[0])


def _reflected_walk_levels(v1: float, ks, gen, b: int) -> np.ndarray:
    """Per-path window means 1 + sum of bounded reflection increments.

    For i.i.d. exponent steps X ~ N(-v1, 2v1), exp(partial sums) is a
    martingale, so telescoping the reflected walk W_k = max(W_{k-1}+X_k, 0)
    gives  E exp(max walk) = 1 + sum_k E[(1 - e^{W_{k-1}+X_k}) 1{<=0}]
    exactly.  Every summand lies in [0,1), so the estimator keeps the
    bounded-variance behaviour the raw exp(max) sample lacks.
    """
    sd = math.sqrt(2.0 * v1)
    vals = np.empty((b, len(ks)))
    W = np.zeros(b)
    C = np.zeros(b)
    ji = 0
    for k in range(1, ks[-1] + 1):
        WX = W + gen.normal(-v1, sd, size=b)
        C -= np.expm1(np.minimum(WX, 0.0)) * (WX <= 0.0)
        W = np.maximum(WX, 0.0)
        if k == ks[ji]:
            vals[:, ji] = 1.0 + C
            ji += 1
    return vals


def estimate_H_rate(
    xi: LabProcess,
    delta: float,
    S_grid: Optional[Sequence[float]] = None,
    reps: int = 100_000,
    rng=0,
) -> PickandsEstimate:
    """Slope of H_xi([0,S]_delta) against S over a coupled S-checkpoint trace.

    One set of paths on [0, max S] serves every checkpoint, so the trace is
    smooth in S and slopes difference away the intercept.  When the exponent
    walk has independent increments the window means are computed through the
    reflected-walk identity (see _reflected_walk_levels), whose per-path
    values stay O(S); otherwise the raw exp(running max) is averaged, whose
    heavy tails make long windows unreliable at moderate replication counts.
    """
    if delta <= 0:
        raise ConfigError("delta must be positive")
    grid = tuple(float(s) for s in (S_grid if S_grid is not None else default_S_grid(delta)))
    if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("S_grid must be increasing with at least 3 entries")
    ks = []
    for s in grid:
        k = s / delta
        k_round = round(k)
        if abs(k - k_round) > 1e-9 * max(k, 1.0) or k_round < 1:
            raise ConfigError(f"S_grid entries must be positive multiples of delta; got S={s}")
        ks.append(int(k_round))
    if reps < _N_BATCHES * 2:
        raise ConfigError(f"reps must be >= {_N_BATCHES * 2}")

    n_steps = ks[-1]
    v1 = _linear_variance_step(xi.variance, delta, n_steps)
    if v1 is None:
        sampler = IncrementSampler(xi.variance, delta, n_steps)
        var_diag = np.asarray(xi.variance(np.arange(1, n_steps + 1) * delta), dtype=float)
    gen = _as_generator(rng)

    n_s = len(grid)
    batch_edges = np.linspace(0, reps, _N_BATCHES + 1).astype(int)
    batch_sums = np.zeros((_N_BATCHES, n_s))
    sums = [[] for _ in range(n_s)]
    sumsqs = [[] for _ in range(n_s)]
    col = np.array(ks) - 1  # checkpoint columns in the nonzero-point array

    done = 0
    while done < reps:
        b = min(_BLOCK, reps - done)
        if v1 is not None:
            vals = _reflected_walk_levels(v1, ks, gen, b)
        else:
            x = sampler.sample_paths(gen, b)[:, 1:]
            e = math.sqrt(2.0) * x - var_diag
            run = np.maximum.accumulate(e, axis=1)[:, col]
            vals = np.exp(np.maximum(run, 0.0))  # the t=0 term contributes exp(0)
        for j in range(n_s):
            v = vals[:, j]
            sums[j].append(math.fsum(v))
            sumsqs[j].append(math.fsum(v * v))
        # spread the block across replication batches by index
        lo = done
        for bi in range(_N_BATCHES):
            a = max(lo, batch_edges[bi]) - lo
            z = min(lo + b, batch_edges[bi + 1]) - lo
            if z > a:
                batch_sums[bi] += vals[a:z].sum(axis=0)
        done += b

    S = np.array(grid)
    H = np.empty(n_s)
    H_se = np.empty(n_s)
    for j in range(n_s):
        H[j], H_se[j] = _mean_se(sums[j], sumsqs[j], reps)
    trace = tuple((S[j], H[j], H[j] / S[j], H_se[j] / S[j]) for j in range(n_s))

    value = _theil_sen(S, H)
    batch_n = np.diff(batch_edges)
    batch_means = batch_sums / batch_n[:, None]
    ts_b = np.array([_theil_sen(S, batch_means[bi]) for bi in range(_N_BATCHES)])
    se = float(ts_b.std(ddof=1) / math.sqrt(_N_BATCHES))

    # plateau diagnostic on the last two H/S levels
    r_prev = H[-2] / S[-2]
    r_last = H[-1] / S[-1]
    d_b = batch_means[:, -2] / S[-2] - batch_means[:, -1] / S[-1]
    se_diff = float(d_b.std(ddof=1) / math.sqrt(_N_BATCHES))
    gap = abs(r_last - r_prev)
    if gap > 3.0 * se_diff and gap > 0.05 * abs(r_last):
        raise RateNotConvergedError(
            f"rate not converged: H/S levels {r_prev:.4f} -> {r_last:.4f} "
            f"differ by {gap:.4f} (> 3 combined SE = {3*se_diff:.4f} and > 5% relative)",
            trace=trace,
        )
    return PickandsEstimate(
        kind="H_rate",
        value=value,
        std_error=se,
        S=float(S[-1]),
        delta=delta,
        reps=reps,
        process_tag=xi.tag,
        trace=trace,
    )
