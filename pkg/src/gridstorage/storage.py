"""Reflected (storage) functional of a drifted path on the grid.

Q(t_j) = max_{i >= j} [X(t_i) - X(t_j) - c (t_i - t_j)] = M_j - Y_j where
Y = X - c t and M_j is the backward running maximum of Y. The scan is over
the realized horizon only; a result is flagged as truncated when a backward
maximum inside the window is attained at the final grid point, i.e. the true
maximizer may lie beyond the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WindowError
from .simulate import PathSample


@dataclass(frozen=True)
class StorageResult:
    """Q at the origin plus extremes of Q over the window [0, T]."""

    q0: float
    sup_window: float
    inf_window: float
    window_T: float
    truncation_flag: bool

    def to_json_dict(self) -> dict:
        return {
            "q0": self.q0,
            "sup": self.sup_window,
            "inf": self.inf_window,
            "T": self.window_T,
            "truncated": self.truncation_flag,
        }


def backward_running_max(drifted: np.ndarray) -> np.ndarray:
    """M_j = max_{i >= j} drifted_i along the last axis."""
    return np.maximum.accumulate(drifted[..., ::-1], axis=-1)[..., ::-1]


def window_index(T: float, delta: float) -> int:
    return int(np.floor(T / delta + 1e-9))


def window_statistics(drifted: np.ndarray, j_max: int):
    """Vectorized (q0, sup, inf, truncated) over rows of a (B, n+1) drifted block."""
    n = drifted.shape[-1] - 1
    if j_max > n:
        raise WindowError(f"window exceeds horizon: need grid index {j_max}, have {n}")
    m = backward_running_max(drifted)
    q = m[..., : j_max + 1] - drifted[..., : j_max + 1]
    return (
        q[..., 0],
        q.max(axis=-1),
        q.min(axis=-1),
        m[..., j_max] == drifted[..., -1],
    )


def storage_window(path: PathSample, T: float) -> StorageResult:
    """Extremes of Q over the grid points of [0, T] for one path."""
    if T < 0:
        raise WindowError("window length T must be >= 0")
    j_max = window_index(T, path.grid.delta)
    q0, sup, inf, flag = window_statistics(path.drifted, j_max)
    return StorageResult(
        q0=float(q0),
        sup_window=float(sup),
        inf_window=float(inf),
        window_T=T,
        truncation_flag=bool(flag),
    )


def storage_at_origin(path: PathSample) -> float:
    """Q(0) = max_k [X(t_k) - c t_k] over the realized horizon."""
    return float(np.max(path.drifted))
