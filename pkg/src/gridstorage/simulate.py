"""Exact path synthesis on uniform grids.

Increments of a stationary-increment Gaussian process on the grid k*delta form
a stationary sequence; sampling goes through circulant embedding of their
Toeplitz covariance (FFT, exact when the embedding is nonnegative definite)
with a dense Cholesky fallback. Streams are counter-based (Philox keyed by
(root_seed, stream_id)), so any block of paths can be regenerated in isolation
and results do not depend on worker scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.fft import next_fast_len

from .errors import ConfigError, HorizonError, PathSynthesisError
from .processes import ProcessSpec, fbm_spec, increment_autocovariance, integrated_srd_spec

_MAX_UINT64 = (1 << 64) - 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid {0, delta, ..., horizon_n * delta}."""

    delta: float
    horizon_n: int

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.horizon_n < 1:
            raise ConfigError("horizon_n must be >= 1")

    @property
    def horizon_t(self) -> float:
        return self.horizon_n * self.delta

    def times(self) -> np.ndarray:
        return np.arange(self.horizon_n + 1) * self.delta


@dataclass(frozen=True)
class RngStream:
    """Deterministic stream addressed by (root_seed, stream_id)."""

    root_seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.root_seed & _MAX_UINT64, self.stream_id & _MAX_UINT64], dtype=np.uint64
        )
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class PathSample:
    """One realized path X on a grid, with the drifted path X(t) - c t."""

    values: np.ndarray  # X(k delta), values[0] = 0
    drifted: np.ndarray  # X(k delta) - c k delta
    seed: RngStream
    grid: GridSpec
    drift_c: float


class IncrementSampler:
    """Samples blocks of stationary increment sequences for one (sigma^2, delta, n).

    Mode is picked at construction: "white" when increments are uncorrelated
    (relative autocovariance below 1e-15), "embedding" when the circulant
    extension is nonnegative definite (up to ``embed_tol`` relative), else a
    dense "cholesky" factorization of the Toeplitz matrix.
    """

    def __init__(self, variance_fn: Callable, delta: float, n: int, embed_tol: float = 1e-8):
        if n < 1:
            raise ConfigError("n must be >= 1")
        self.delta = float(delta)
        self.n = int(n)
        gamma = increment_autocovariance(variance_fn, delta, n)
        g0 = float(gamma[0])
        if g0 <= 0:
            raise PathSynthesisError("path synthesis failed: increment variance is not positive")
        self._sd0 = math.sqrt(g0)
        if n == 1 or self._is_white(variance_fn, delta, n, gamma, g0):
            self.mode = "white"
            return
        lam, m = self._embedding_eigs(variance_fn, delta, n, g0, embed_tol)
        if lam is not None:
            self.mode = "embedding"
            self._lam = lam
            self._m = m
            self._half = m // 2
            return
        self.mode = "cholesky"
        self._chol = self._dense_factor(gamma)

    @staticmethod
    def _is_white(variance_fn, delta, n, gamma, g0) -> bool:
        # gamma(k) is a second difference of sigma^2; compare it to the rounding
        # floor of its own largest term, sigma^2((k+1) delta), so exact white
        # noise is recognized at any lag while real correlation never is
        scale = np.asarray(variance_fn(np.arange(2, n + 1, dtype=float) * delta), dtype=float)
        floor = 64.0 * np.finfo(float).eps * np.maximum(scale, g0)
        return bool(np.all(np.abs(gamma[1:]) <= floor))

    @staticmethod
    def _embedding_eigs(variance_fn, delta, n, g0, embed_tol):
        m = next_fast_len(2 * n)
        while m % 2:  # the half-spectrum construction needs an even length
            m = next_fast_len(m + 1)
        gamma_ext = increment_autocovariance(variance_fn, delta, m // 2 + 1)
        first_row = np.concatenate([gamma_ext, gamma_ext[-2:0:-1]])
        lam = np.fft.rfft(first_row).real
        lam_max = float(lam.max())
        if lam_max <= 0 or float(lam.min()) < -embed_tol * lam_max:
            return None, m
        return np.clip(lam, 0.0, None), m

    @staticmethod
    def _dense_factor(gamma: np.ndarray) -> np.ndarray:
        from scipy.linalg import toeplitz

        mat = toeplitz(gamma)
        jitter = 0.0
        for _ in range(3):
            try:
                return np.linalg.cholesky(mat + jitter * np.eye(len(mat)))
            except np.linalg.LinAlgError:
                jitter = max(jitter * 100.0, 1e-12 * gamma[0])
        # last resort: spectral clip, exact for anything merely rank-deficient
        w, v = np.linalg.eigh(mat)
        if w[0] < -1e-8 * max(w[-1], 0.0):
            raise PathSynthesisError(
                f"path synthesis failed: increment covariance indefinite (min eig {w[0]:.3e})"
            )
        return v * np.sqrt(np.clip(w, 0.0, None))

    def sample_increments(self, rng: np.random.Generator, n_paths: int) -> np.ndarray:
        """(n_paths, n) increments; consumes the stream in a chunking-invariant order."""
        if self.mode == "white":
            return self._sd0 * rng.standard_normal((n_paths, self.n))
        if self.mode == "embedding":
            h = self._half
            z = rng.standard_normal((n_paths, 2 * h))
            w = np.empty((n_paths, h + 1), dtype=complex)
            w[:, 0] = np.sqrt(self._m * self._lam[0]) * z[:, 0]
            w[:, h] = np.sqrt(self._m * self._lam[h]) * z[:, 1]
            amp = np.sqrt(self._m * self._lam[1:h] / 2.0)
            w[:, 1:h] = amp * (z[:, 2 : h + 1] + 1j * z[:, h + 1 : 2 * h])
            x = np.fft.irfft(w, self._m)[:, : self.n]
            return np.ascontiguousarray(x)
        z = rng.standard_normal((n_paths, self.n))
        return z @ self._chol.T

    def sample_paths(self, rng: np.random.Generator, n_paths: int) -> np.ndarray:
        """(n_paths, n+1) path values with X(0) = 0."""
        inc = self.sample_increments(rng, n_paths)
        out = np.empty((n_paths, self.n + 1))
        out[:, 0] = 0.0
        np.cumsum(inc, axis=1, out=out[:, 1:])
        return out


def _single_path(sampler: IncrementSampler, grid: GridSpec, stream: RngStream, drift_c: float) -> PathSample:
    rng = stream.generator()
    values = sampler.sample_paths(rng, 1)[0]
    drifted = values - drift_c * grid.times()
    return PathSample(values=values, drifted=drifted, seed=stream, grid=grid, drift_c=drift_c)


def simulate_fbm(hurst: float, grid: GridSpec, rng: RngStream, drift_c: float = 0.0) -> PathSample:
    """One fractional-Brownian path (Var X(t) = t^{2H}) on the grid."""
    spec = fbm_spec(hurst, c=max(drift_c, 1.0))  # drift only shifts; c>0 check is separate
    sampler = IncrementSampler(spec.variance.eval, grid.delta, grid.horizon_n)
    return _single_path(sampler, grid, rng, drift_c)


def simulate_integrated(R: Callable, grid: GridSpec, rng: RngStream, drift_c: float = 0.0) -> PathSample:
    """One integrated-noise path Z(t) = int_0^t zeta, Cov(zeta(0), zeta(t)) = R(t)."""
    spec = integrated_srd_spec(R, c=max(drift_c, 1.0))
    sampler = IncrementSampler(spec.variance.eval, grid.delta, grid.horizon_n)
    return _single_path(sampler, grid, rng, drift_c)


def sampler_for_spec(spec: ProcessSpec, delta: float, n: int) -> IncrementSampler:
    return IncrementSampler(spec.variance.eval, delta, n)


def required_horizon(
    spec: ProcessSpec,
    u: float,
    delta: float,
    safety: float = 3.0,
    window_T: float = 0.0,
    cap_n: int = 50_000_000,
) -> GridSpec:
    """Grid covering [0, safety * u * max(t_u, t*) + window_T].

    The storage supremum localizes around u * t_u; the safety factor keeps the
    truncation bias of the finite scan negligible against sampling error.
    """
    from .asymptotics import core_quantities

    if safety < 1.0:
        raise ConfigError("safety factor must be >= 1")
    cq = core_quantities(spec, u)
    span = safety * u * max(cq.t_u, cq.t_star) + window_T
    # relative guard: t_u carries ~1e-10 optimization wobble that must not
    # bump the step count across an exact-integer boundary
    q = span / delta
    n = int(math.ceil(q - max(1e-9, 1e-9 * q)))
    if n > cap_n:
        raise HorizonError(
            f"horizon too large: {n} grid steps exceed the cap {cap_n} "
            f"(u={u}, delta={delta}, safety={safety})"
        )
    return GridSpec(delta=delta, horizon_n=max(n, 1))


def dump_path_csv(path: PathSample, fileobj) -> None:
    """Write the path as CSV with columns k,t,X,X-ct."""
    import csv

    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["k", "t", "X", "X-ct"])
    t = path.grid.times()
    for k in range(len(t)):
        writer.writerow([k, repr(float(t[k])), repr(float(path.values[k])), repr(float(path.drifted[k]))])
