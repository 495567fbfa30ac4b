"""Gaussian process families with stationary increments and their regime classification.

A process is described by its variance function sigma^2(t) = Var X(t), the
regular-variation index alpha (sigma^2 is regularly varying at infinity with
index 2*alpha), and the drift rate c of the storage functional. The ratio
sigma^2(t)/t as t -> infinity (phi) splits the asymptotics into three regimes:

    alpha < 1/2  ->  phi = 0        ("zero")
    alpha = 1/2  ->  phi in (0,inf) ("finite", requires phi > 0)
    alpha > 1/2  ->  phi = inf      ("infinite")

Built-in families: fractional Brownian motion (Var = t^{2H}) and integrated
stationary Gaussian noise Z(t) = int_0^t zeta(s) ds with correlation R, for
which sigma_Z^2(t) = 2 int_0^t (t-s) R(s) ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import ClassificationError, ConfigError, QuadratureError, VarianceModelError

_QUAD_LIMIT = 200
_SRD_CUTOFF_TEST = 1e-12  # scan stops once |R(t)| * t^2 drops below this


@dataclass(frozen=True)
class VarianceFunction:
    """Variance function sigma^2(t) with its regular-variation indices.

    ``eval`` must accept numpy arrays (all built-in families do).
    ``index_alpha`` is the index at infinity (sigma^2 ~ t^{2 alpha} L(t));
    ``index_alpha0`` is the index at 0, carried for reporting only -- nothing
    in the discrete formulas branches on it.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    index_alpha: float
    index_alpha0: float

    def sigma(self, t):
        return np.sqrt(self.eval(t))


@dataclass(frozen=True)
class ProcessSpec:
    """A Gaussian process with stationary increments plus the drift rate c."""

    variance: VarianceFunction
    drift_c: float
    family: str  # "fbm" | "integrated_srd" | "integrated_lrd" | "custom"
    hurst: Optional[float] = None
    correlation_R: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # srd-only constants: G = 1/int_0^inf R, D = int_0^inf t R(t) dt
    srd_G: Optional[float] = None
    srd_D: Optional[float] = None
    config: dict = field(default_factory=dict)

    @property
    def alpha(self) -> float:
        return self.variance.index_alpha

    def describe(self) -> str:
        items = ", ".join(f"{k}={v}" for k, v in self.config.items())
        return items or self.family


@dataclass(frozen=True)
class RegimeClass:
    """Classification phi = lim sigma^2(t)/t with validity flags."""

    phi: float  # 0.0, finite positive, or math.inf
    regime: str  # "zero" | "finite" | "infinite"
    condition_B_ok: bool
    alpha: float
    probe_trace: tuple = ()


def _as_array_fn(fn: Callable) -> Callable[[np.ndarray], np.ndarray]:
    def wrapped(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(fn(t), dtype=float)

    return wrapped


# ---------------------------------------------------------------------------
# built-in correlation kernels for the integrated families


def exponential_kernel(scale: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """R(t) = exp(-t/scale): short-range dependent, G = 1/scale, D = scale^2."""
    if scale <= 0:
        raise ConfigError("R_scale must be positive")

    def R(t):
        return np.exp(-np.asarray(t, dtype=float) / scale)

    return R


def power_kernel(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """R(t) = (1+t)^{2 alpha - 2}: regularly varying with index 2 alpha - 2.

    For alpha in (1/2, 1) this is the long-range-dependent family; the
    integrated variance then grows like t^{2 alpha} times a constant.
    """
    if not 0.5 < alpha < 1.0:
        raise ConfigError("power kernel needs alpha in (1/2, 1)")

    def R(t):
        return (1.0 + np.asarray(t, dtype=float)) ** (2.0 * alpha - 2.0)

    return R


# ---------------------------------------------------------------------------
# integrated variance sigma_Z^2(t) = 2 int_0^t (t-s) R(s) ds


def _quad(fn, lo, hi, points=None):
    try:
        val, err = integrate.quad(fn, lo, hi, limit=_QUAD_LIMIT, points=points)
    except Exception as exc:  # pragma: no cover - scipy-internal failures
        raise QuadratureError(f"quadrature failed on [{lo}, {hi}]: {exc}") from exc
    scale = max(abs(val), 1e-300)
    if err > 1e-8 * scale and err > 1e-12:
        raise QuadratureError(
            f"quadrature non-convergence on [{lo}, {hi}]: achieved abs error {err:.3e}"
        )
    return val


def integrated_variance(R: Callable, t: float, split_at: Optional[float] = None) -> float:
    """sigma_Z^2(t) = 2 int_0^t (t-s) R(s) ds by adaptive quadrature.

    ``split_at`` forces a subdivision point; needed when R decays fast and t is
    many orders of magnitude beyond the decay scale, where a blind adaptive
    rule would sample past the whole mass of the integrand.
    """
    t = float(t)
    if t < 0:
        raise ConfigError("integrated variance needs t >= 0")
    if t == 0.0:
        return 0.0
    points = None
    if split_at is not None and 0.0 < split_at < t:
        points = [split_at]
    return 2.0 * _quad(lambda s: (t - s) * R(s), 0.0, t, points=points)


def srd_cutoff(R: Callable, t_max: float = 2.0**40) -> float:
    """Smallest probed T with |R(T)| * T^2 below tolerance (S3 tail control)."""
    t = 1.0
    while t < t_max:
        if abs(float(R(t))) * t * t < _SRD_CUTOFF_TEST:
            return t
        t *= 2.0
    raise VarianceModelError(
        "correlation does not decay like a short-range kernel (no quadrature cutoff found)"
    )


def srd_constants(R: Callable) -> tuple[float, float]:
    """G = 1/int_0^inf R and D = int_0^inf t R(t) dt, integrated to the cutoff."""
    t_cut = srd_cutoff(R)
    total = _quad(R, 0.0, t_cut)
    if total <= 0:
        raise VarianceModelError("invalid variance function: int_0^inf R must be positive (S2)")
    D = _quad(lambda s: s * R(s), 0.0, t_cut)
    return 1.0 / total, D


def check_srd_conditions(R: Callable, probes=(1e2, 1e3, 1e4)) -> dict:
    """Numeric S1-S3 diagnostics: t R(t) -> 0, int_0^t R > 0, int t^2 |R| < inf."""
    tail = [abs(float(R(t))) * t for t in probes]
    partial_positive = all(_quad(R, 0.0, t) > 0 for t in (0.5, 1.0, 5.0, 25.0))
    t_cut = srd_cutoff(R)
    return {
        "tR_tail": tuple(tail),
        "tR_vanishes": tail[-1] < 1e-6,
        "partial_integral_positive": partial_positive,
        "cutoff": t_cut,
    }


# ---------------------------------------------------------------------------
# spec constructors


def fbm_spec(hurst: float, c: float) -> ProcessSpec:
    """Fractional Brownian motion with Var B_H(t) = t^{2H} and drift rate c."""
    if not 0.0 < hurst < 1.0:
        raise ConfigError(f"hurst must lie in (0,1), got {hurst}")
    if c <= 0:
        raise ConfigError("drift rate c must be positive")
    H = float(hurst)

    def var(t):
        return np.asarray(t, dtype=float) ** (2.0 * H)

    vf = VarianceFunction(eval=var, index_alpha=H, index_alpha0=H)
    return ProcessSpec(
        variance=vf,
        drift_c=float(c),
        family="fbm",
        hurst=H,
        config={"family": "fbm", "hurst": H, "c": float(c)},
    )


class _IntegratedVariance:
    """Callable sigma_Z^2 with per-t caching; pickles by reconstructing from config."""

    def __init__(self, R: Callable, split_at: Optional[float]):
        self._R = R
        self._split = split_at
        self._scalar = lru_cache(maxsize=65536)(self._compute)

    def _compute(self, t: float) -> float:
        return integrated_variance(self._R, t, split_at=self._split)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return np.float64(self._scalar(float(t)))
        return np.array([self._scalar(float(x)) for x in t.ravel()]).reshape(t.shape)


def integrated_srd_spec(
    R: Callable, c: float, label: str = "custom", config: Optional[dict] = None
) -> ProcessSpec:
    """Integrated short-range-dependent noise: alpha = 1/2, phi = 2/G."""
    if c <= 0:
        raise ConfigError("drift rate c must be positive")
    diag = check_srd_conditions(R)
    if not (diag["tR_vanishes"] and diag["partial_integral_positive"]):
        raise VarianceModelError(f"correlation fails the short-range conditions: {diag}")
    G, D = srd_constants(R)
    var = _IntegratedVariance(R, split_at=diag["cutoff"])
    vf = VarianceFunction(eval=var, index_alpha=0.5, index_alpha0=1.0)
    return ProcessSpec(
        variance=vf,
        drift_c=float(c),
        family="integrated_srd",
        correlation_R=_as_array_fn(R),
        srd_G=G,
        srd_D=D,
        config=config or {"family": "integrated_srd", "R": label, "c": float(c)},
    )


def integrated_lrd_spec(
    R: Callable, c: float, alpha: float, label: str = "custom", config: Optional[dict] = None
) -> ProcessSpec:
    """Integrated long-range-dependent noise: R regularly varying, alpha in (1/2,1)."""
    if not 0.5 < alpha < 1.0:
        raise ConfigError("integrated LRD family needs alpha in (1/2, 1)")
    if c <= 0:
        raise ConfigError("drift rate c must be positive")
    var = _IntegratedVariance(R, split_at=None)
    vf = VarianceFunction(eval=var, index_alpha=float(alpha), index_alpha0=1.0)
    return ProcessSpec(
        variance=vf,
        drift_c=float(c),
        family="integrated_lrd",
        correlation_R=_as_array_fn(R),
        config=config or {"family": "integrated_lrd", "R": label, "alpha": float(alpha), "c": float(c)},
    )


def custom_spec(variance_fn: Callable, alpha: float, c: float, alpha0: Optional[float] = None) -> ProcessSpec:
    """Wrap an arbitrary vectorized variance function (taken at the caller's word)."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0,1)")
    if c <= 0:
        raise ConfigError("drift rate c must be positive")
    vf = VarianceFunction(
        eval=_as_array_fn(variance_fn), index_alpha=float(alpha), index_alpha0=float(alpha0 or alpha)
    )
    return ProcessSpec(variance=vf, drift_c=float(c), family="custom", config={"family": "custom", "alpha": alpha, "c": c})


# ---------------------------------------------------------------------------
# flat key=value serialization (the config-block external interface)

_KNOWN_FAMILIES = ("fbm", "integrated_srd", "integrated_lrd")
_KNOWN_KERNELS = ("exp", "pow")


def spec_from_config(cfg: dict) -> ProcessSpec:
    """Build a ProcessSpec from a flat config block.

    Recognized keys: family, hurst, c, R, R_scale, alpha.
    """
    family = cfg.get("family")
    if family is None:
        raise ConfigError("missing config key: family")
    c = float(cfg.get("c", 1.0))
    if family == "fbm":
        if "hurst" not in cfg:
            raise ConfigError("missing config key: hurst (required for family=fbm)")
        return fbm_spec(float(cfg["hurst"]), c)
    if family in ("integrated_srd", "integrated_lrd"):
        kernel = cfg.get("R", "exp")
        if kernel == "exp":
            scale = float(cfg.get("R_scale", 1.0))
            R = exponential_kernel(scale)
            if family == "integrated_lrd":
                raise ConfigError("R=exp is short-range; use family=integrated_srd")
            canonical = {"family": family, "R": "exp", "R_scale": scale, "c": c}
            out = integrated_srd_spec(R, c, label=f"exp(scale={scale})", config=canonical)
        elif kernel == "pow":
            if "alpha" not in cfg:
                raise ConfigError("missing config key: alpha (required for R=pow)")
            alpha = float(cfg["alpha"])
            R = power_kernel(alpha)
            if family == "integrated_srd":
                raise ConfigError("R=pow is long-range; use family=integrated_lrd")
            canonical = {"family": family, "R": "pow", "alpha": alpha, "c": c}
            out = integrated_lrd_spec(R, c, alpha, label=f"pow(alpha={alpha})", config=canonical)
        else:
            raise ConfigError(f"unknown correlation kernel: R={kernel} (known: {_KNOWN_KERNELS})")
        return out
    raise ConfigError(f"unknown family: {family} (known: {_KNOWN_FAMILIES})")


def spec_to_config(spec: ProcessSpec) -> dict:
    return dict(spec.config)


# ---------------------------------------------------------------------------
# regime classification


DEFAULT_PROBES = tuple(10.0**k for k in range(2, 9))


def classify_regime(spec: ProcessSpec, probe_ts=DEFAULT_PROBES) -> RegimeClass:
    """Classify phi = lim sigma^2(t)/t by the alpha rule plus numeric probing.

    alpha decides the regime away from 1/2; at alpha = 1/2 the probe ratios
    must converge (three successive values within 1e-3 relative) to a positive
    limit, diverge past 1e6, or the classification is inconclusive.
    """
    probes = tuple(float(t) for t in probe_ts)
    if len(probes) < 3 or any(b <= a for a, b in zip(probes, probes[1:])):
        raise ConfigError("probe_ts must be increasing with at least 3 entries")
    if probes[-1] < 1e6:
        raise ConfigError("probe_ts must reach 1e6 to probe the limit")
    alpha = spec.alpha
    ratios = tuple(float(spec.variance.eval(t)) / t for t in probes)
    trace = tuple(zip(probes, ratios))

    if alpha < 0.5:
        return RegimeClass(phi=0.0, regime="zero", condition_B_ok=True, alpha=alpha, probe_trace=trace)
    if alpha > 0.5:
        return RegimeClass(phi=math.inf, regime="infinite", condition_B_ok=True, alpha=alpha, probe_trace=trace)

    # alpha == 1/2: the probes must settle
    r = ratios
    converged = all(
        abs(r[i] - r[i - 1]) <= 1e-3 * max(abs(r[i]), abs(r[i - 1]), 1e-300) for i in (-2, -1)
    )
    if converged and r[-1] > 1e-12:
        return RegimeClass(phi=r[-1], regime="finite", condition_B_ok=True, alpha=alpha, probe_trace=trace)
    if converged:
        # numerically vanishing phi at alpha = 1/2: out of the supported scope
        return RegimeClass(phi=0.0, regime="zero", condition_B_ok=False, alpha=alpha, probe_trace=trace)
    increasing = all(b > a for a, b in zip(r, r[1:]))
    if increasing and r[-1] > 1e6:
        return RegimeClass(phi=math.inf, regime="infinite", condition_B_ok=True, alpha=alpha, probe_trace=trace)
    raise ClassificationError(
        "inconclusive classification: sigma^2(t)/t neither converges nor diverges "
        f"over the probes (trace: {trace})",
        trace=trace,
    )


# ---------------------------------------------------------------------------
# increment covariance


def increment_autocovariance(variance_fn: Callable, delta: float, n_lags: int) -> np.ndarray:
    """Autocovariance of grid increments at lags 0..n_lags-1.

    gamma(k) = 1/2 [sigma^2((k+1)d) + sigma^2((|k-1|)d) - 2 sigma^2(kd)].
    """
    if delta <= 0:
        raise ConfigError("delta must be positive")
    k = np.arange(n_lags, dtype=float)
    s2 = variance_fn(np.concatenate([k, [n_lags]]) * delta)
    s2m = np.empty(n_lags)
    s2m[0] = s2[1]  # |k-1| = 1 at k = 0
    s2m[1:] = s2[:-1][: n_lags - 1]
    gamma = 0.5 * (s2[1 : n_lags + 1] + s2m - 2.0 * s2[:n_lags])
    return gamma


def covariance_increments(spec: ProcessSpec, delta: float, n: int, check: bool = True) -> np.ndarray:
    """Toeplitz covariance matrix of the n grid increments.

    ``check`` validates positive semidefiniteness (attempted Cholesky, then an
    eigenvalue check); an indefinite matrix means the variance function is not
    a valid stationary-increment variance on this grid.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    gamma = increment_autocovariance(spec.variance.eval, delta, n)
    from scipy.linalg import toeplitz

    mat = toeplitz(gamma)
    if check:
        _assert_psd(mat)
    return mat


def _assert_psd(mat: np.ndarray, tol: float = 1e-8) -> None:
    jitter = tol * max(float(np.max(np.diag(mat))), 1e-300)
    try:
        np.linalg.cholesky(mat + jitter * np.eye(len(mat)))
        return
    except np.linalg.LinAlgError:
        pass
    w = np.linalg.eigvalsh(mat)
    if w[0] < -tol * max(w[-1], 0.0):
        raise VarianceModelError(
            f"invalid variance function: increment covariance is indefinite "
            f"(min eigenvalue {w[0]:.3e}, max {w[-1]:.3e})"
        )
