"""Closed-form asymptotics for grid-scanned storage exceedance probabilities.

Everything here is deterministic. The central object is the normalized family
X_u(t) = X(ut) m(u) / (u(1+ct)) whose standard deviation peaks at t_u near
t* = alpha/(c(1-alpha)); the exceedance probability P(Q > u) behaves like
``prefactor * Psi(m(u))`` with a regime-dependent prefactor:

    zero      sqrt(2 pi alpha) u / (delta c (1-alpha)^{3/2} m(u))
    finite    H_eta^delta * f(u)
    infinite  H_{B_alpha} * f(u)

where f(u) = sqrt(2 pi A / B) u / (m(u) Delta(u)). Pickands-type constants are
injected (typically estimated by the Monte Carlo lab); absent constants default
to 1 with a "constant-free" flag so the deterministic shape can be tested in
isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import log_ndtr, logsumexp, ndtr

from .errors import InverseError, OptimizationError, UnsupportedRegimeError, WindowError
from .processes import ProcessSpec, RegimeClass, classify_regime

_SQRT2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Gaussian survival


def standard_normal_survival(x: float):
    """Psi(x) = P(N(0,1) > x), complementary-error-function based."""
    return ndtr(-np.asarray(x, dtype=float))


def log_standard_normal_survival(x: float):
    return log_ndtr(-np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# scalar minimization (golden section + parabolic polish)


def golden_minimize(fn: Callable[[float], float], lo: float, hi: float, rel_tol: float = 1e-10) -> float:
    """Minimize a unimodal function on [lo, hi] to relative bracket width rel_tol.

    Raises when the minimum sits at the bracket edge: the formulas need an
    interior minimizer, so an edge hit means the bracket assumption failed.
    """
    if not (lo < hi):
        raise OptimizationError("m(u) optimization failed: empty bracket")
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    scale = max(abs(a), abs(b), 1e-12)
    for _ in range(300):
        if (b - a) <= rel_tol * scale:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    t = 0.5 * (a + b)
    # two rounds of parabolic-vertex polish sharpen the golden estimate well
    # below the bracket tolerance without risking an escape from [lo, hi]
    for _ in range(2):
        h = 3e-5 * max(abs(t), 1e-12)
        f0, fp, fm = fn(t), fn(t + h), fn(t - h)
        denom = fp - 2.0 * f0 + fm
        if denom > 0.0:
            step = 0.5 * h * (fm - fp) / denom
            if abs(step) <= 4.0 * h:
                t = min(max(t + step, lo), hi)
    edge = rel_tol * scale * 8.0 + 1e-14 * scale
    if t - lo < edge or hi - t < edge:
        raise OptimizationError(
            f"m(u) optimization failed: minimizer {t!r} sits at the bracket edge [{lo}, {hi}]"
        )
    return t


def sigma_asymptotic_inverse(spec: ProcessSpec, y: float) -> float:
    """t with sigma(t) = y, using that sigma is continuous and ultimately increasing."""
    if y <= 0:
        raise InverseError(f"asymptotic inverse failed: need y > 0, got {y}")
    if spec.family == "fbm":
        return y ** (1.0 / spec.hurst)
    sigma = spec.variance.sigma

    def g(t):
        return float(sigma(t)) - y

    lo = hi = 1.0
    for _ in range(200):
        if g(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise InverseError(f"asymptotic inverse failed: sigma never reaches {y}")
    for _ in range(200):
        if g(lo) <= 0.0:
            break
        lo /= 2.0
    else:
        raise InverseError(f"asymptotic inverse failed: sigma exceeds {y} at all probed t")
    from scipy.optimize import brentq

    return float(brentq(g, lo, hi, rtol=1e-12, maxiter=200))


# ---------------------------------------------------------------------------
# core quantities


@dataclass(frozen=True)
class CoreQuantities:
    t_star: float
    t_u: float
    m_u: float
    delta_u_scale: float
    A: float
    B: float
    f_u: float
    u: float


@dataclass(frozen=True)
class NormalizedField:
    """Standard deviation profile of the normalized family X_u."""

    sigma_Xu: Callable[[np.ndarray], np.ndarray]
    t_u: float
    u: float


def _ensure_regime(spec: ProcessSpec, regime: Optional[RegimeClass]) -> RegimeClass:
    return regime if regime is not None else classify_regime(spec)


def core_quantities(spec: ProcessSpec, u: float, regime: Optional[RegimeClass] = None) -> CoreQuantities:
    """t*, t_u, m(u), Delta(u), A, B, f(u) for one exceedance level u."""
    if u <= 0:
        raise OptimizationError("m(u) optimization failed: u must be positive")
    regime = _ensure_regime(spec, regime)
    alpha = spec.alpha
    c = spec.drift_c
    t_star = alpha / (c * (1.0 - alpha))
    var = spec.variance.eval

    def objective(t: float) -> float:
        return u * (1.0 + c * t) / math.sqrt(float(var(u * t)))

    t_u = golden_minimize(objective, t_star / 10.0, 10.0 * t_star)
    m_u = objective(t_u)

    if regime.regime == "finite":
        delta_u = 1.0
    else:
        y = math.sqrt(2.0) * float(var(u * t_star)) / (u * (1.0 + c * t_star))
        delta_u = sigma_asymptotic_inverse(spec, y)

    A = 1.0 / ((1.0 - alpha) * t_star**alpha)
    B = alpha / t_star ** (alpha + 2.0)
    f_u = math.sqrt(2.0 * math.pi * A / B) * u / (m_u * delta_u)
    return CoreQuantities(
        t_star=t_star, t_u=t_u, m_u=m_u, delta_u_scale=delta_u, A=A, B=B, f_u=f_u, u=u
    )


def normalized_field(spec: ProcessSpec, u: float, cq: Optional[CoreQuantities] = None) -> NormalizedField:
    cq = cq if cq is not None else core_quantities(spec, u)
    var = spec.variance.eval
    c = spec.drift_c
    m_u = cq.m_u

    def sigma_Xu(t):
        t = np.asarray(t, dtype=float)
        return np.sqrt(var(u * t)) * m_u / (u * (1.0 + c * t))

    return NormalizedField(sigma_Xu=sigma_Xu, t_u=cq.t_u, u=u)


# ---------------------------------------------------------------------------
# predictions


@dataclass(frozen=True)
class AsymptoticApproximation:
    kind: str  # point | sup_window | inf_window | prop1_bound
    regime: RegimeClass
    value: float
    prefactor: float
    psi_m: float
    constants_used: dict = field(default_factory=dict)
    u: float = 0.0
    T: float = 0.0
    delta: float = 0.0
    log_value: float = -math.inf
    flags: tuple = ()


def _finish(
    kind, regime, prefactor, cq, u, T, delta, constants, flags, log_prefactor=None
) -> AsymptoticApproximation:
    psi = float(standard_normal_survival(cq.m_u))
    log_psi = float(log_standard_normal_survival(cq.m_u))
    value = prefactor * psi
    if log_prefactor is None:
        log_prefactor = math.log(prefactor) if prefactor > 0 else -math.inf
    log_value = log_prefactor + log_psi
    if value > 1.0:
        flags = flags + ("value>1",)
    return AsymptoticApproximation(
        kind=kind,
        regime=regime,
        value=value,
        prefactor=prefactor,
        psi_m=psi,
        constants_used=dict(constants),
        u=u,
        T=T,
        delta=delta,
        log_value=log_value,
        flags=flags,
    )


def _check_supported(regime: RegimeClass) -> None:
    if regime.alpha == 0.5 and regime.regime == "zero":
        raise UnsupportedRegimeError(
            "out of scope: alpha = 1/2 with vanishing sigma^2(t)/t is outside the "
            "supported regimes (needs a positive finite limit)"
        )


def zero_regime_prefactor(spec: ProcessSpec, u: float, delta: float, cq: CoreQuantities) -> float:
    alpha = spec.alpha
    return (
        math.sqrt(2.0 * math.pi * alpha)
        * u
        / (delta * spec.drift_c * (1.0 - alpha) ** 1.5 * cq.m_u)
    )


def _pickands_or_one(value: Optional[float], name: str, constants: dict, flags: tuple):
    if value is None:
        constants[name] = 1.0
        if "constant-free" not in flags:
            flags = flags + ("constant-free",)
        return 1.0, flags
    constants[name] = float(value)
    return float(value), flags


def predict_point(
    spec: ProcessSpec,
    u: float,
    delta: float,
    pickands: Optional[float] = None,
    regime: Optional[RegimeClass] = None,
) -> AsymptoticApproximation:
    """P(Q(0) > u) approximation at grid mesh delta."""
    regime = _ensure_regime(spec, regime)
    _check_supported(regime)
    cq = core_quantities(spec, u, regime)
    constants: dict = {}
    flags: tuple = ()
    if regime.regime == "zero":
        prefactor = zero_regime_prefactor(spec, u, delta, cq)
    elif regime.regime == "finite":
        const, flags = _pickands_or_one(pickands, "H_eta_delta", constants, flags)
        prefactor = const * cq.f_u
    else:
        const, flags = _pickands_or_one(pickands, "H_fbm_alpha", constants, flags)
        prefactor = const * cq.f_u
    return _finish("point", regime, prefactor, cq, u, 0.0, delta, constants, flags)


def _window_count(T: float, delta: float) -> int:
    return int(math.floor(T / delta + 1e-9))


def predict_sup(
    spec: ProcessSpec,
    u: float,
    T: float,
    delta: float,
    pickands_window: Optional[float] = None,
    pickands_delta: Optional[float] = None,
    regime: Optional[RegimeClass] = None,
) -> AsymptoticApproximation:
    """P(sup_{[0,T] grid} Q > u) approximation."""
    if T < 0:
        raise WindowError("window length T must be >= 0")
    regime = _ensure_regime(spec, regime)
    _check_supported(regime)
    cq = core_quantities(spec, u, regime)
    constants: dict = {}
    flags: tuple = ()
    n_window = _window_count(T, delta)
    if regime.regime == "zero":
        prefactor = zero_regime_prefactor(spec, u, delta, cq) * (1 + n_window)
    elif regime.regime == "finite":
        rate, flags = _pickands_or_one(pickands_delta, "H_eta_delta", constants, flags)
        if n_window == 0:
            window = 1.0  # single-point window: E exp(sqrt(2) eta(0)) = 1 exactly
            constants["H_eta_window"] = window
        else:
            window, flags = _pickands_or_one(pickands_window, "H_eta_window", constants, flags)
        prefactor = window * rate * cq.f_u
    else:
        # no window dependence: the point maximum dominates the whole window
        const, flags = _pickands_or_one(pickands_window or pickands_delta, "H_fbm_alpha", constants, flags)
        prefactor = const * cq.f_u
    return _finish("sup_window", regime, prefactor, cq, u, T, delta, constants, flags)


def predict_inf(
    spec: ProcessSpec,
    u: float,
    T: float,
    delta: float,
    pickands_window: Optional[float] = None,
    pickands_delta: Optional[float] = None,
    regime: Optional[RegimeClass] = None,
) -> AsymptoticApproximation:
    """P(inf_{[0,T] grid} Q > u) approximation (bound only in the zero regime)."""
    if T < 0:
        raise WindowError("window length T must be >= 0")
    regime = _ensure_regime(spec, regime)
    _check_supported(regime)
    cq = core_quantities(spec, u, regime)
    constants: dict = {}
    flags: tuple = ()
    n_window = _window_count(T, delta)
    if regime.regime == "zero":
        if n_window == 0:
            prefactor = zero_regime_prefactor(spec, u, delta, cq)
            return _finish("inf_window", regime, prefactor, cq, u, T, delta, constants, flags)
        return predict_prop1_bound(spec, u, T, delta, regime=regime)
    if regime.regime == "finite":
        rate, flags = _pickands_or_one(pickands_delta, "H_eta_delta", constants, flags)
        if n_window == 0:
            window = 1.0
            constants["G_eta_window"] = window
        else:
            window, flags = _pickands_or_one(pickands_window, "G_eta_window", constants, flags)
        prefactor = window * rate * cq.f_u
    else:
        const, flags = _pickands_or_one(pickands_window or pickands_delta, "H_fbm_alpha", constants, flags)
        prefactor = const * cq.f_u
    return _finish("inf_window", regime, prefactor, cq, u, T, delta, constants, flags)


def predict_prop1_bound(
    spec: ProcessSpec,
    u: float,
    T: float,
    delta: float,
    regime: Optional[RegimeClass] = None,
) -> AsymptoticApproximation:
    """Upper bound Psi(m(u)) * Psi(Q~ u / sigma^2(u)) for the zero-regime window infimum."""
    regime = _ensure_regime(spec, regime)
    if regime.regime != "zero":
        raise UnsupportedRegimeError("the window-infimum bound applies to the zero regime only")
    if T < delta:
        raise WindowError("the window-infimum bound needs T >= delta")
    cq = core_quantities(spec, u, regime)
    alpha = spec.alpha
    c = spec.drift_c
    t_star = cq.t_star
    n_window = _window_count(T, delta)
    grid = np.arange(n_window + 1) * delta
    sup_sigma = float(np.max(spec.variance.sigma(grid)))
    # any constant strictly below (1+ct*)/(2 t*^{2 alpha}) sup sigma is admissible;
    # 0.99 of the supremum keeps the bound near its tightest allowed value
    q_tilde = 0.99 * (1.0 + c * t_star) / (2.0 * t_star ** (2.0 * alpha)) * sup_sigma
    sigma2_u = float(spec.variance.eval(u))
    flags: tuple = ("upper bound only",)
    sigma_u = math.sqrt(sigma2_u)
    if u > 1.0 and sigma_u > math.sqrt(u) / math.log(u) ** 0.3:
        flags = flags + ("hypothesis unverified",)
    ratio = q_tilde * u / sigma2_u
    prefactor = float(standard_normal_survival(ratio))
    return _finish(
        "prop1_bound",
        regime,
        prefactor,
        cq,
        u,
        T,
        delta,
        {"Q_tilde": q_tilde},
        flags,
        log_prefactor=float(log_standard_normal_survival(ratio)),
    )


# ---------------------------------------------------------------------------
# fractional-Brownian closed forms


def corollary_constants(hurst: float, c: float) -> dict:
    """The three closed-form constants of the fractional-Brownian specialization.

    C: m(u) = C u^{1-H}; D: zero-regime prefactor = D u^H / delta;
    E: f(u) = E m(u)^{1/H - 1}.
    """
    if not 0.0 < hurst < 1.0:
        raise UnsupportedRegimeError(f"hurst must lie in (0,1), got {hurst}")
    if c <= 0:
        raise UnsupportedRegimeError("drift rate c must be positive")
    H = hurst
    C = c**H / (H**H * (1.0 - H) ** (1.0 - H))
    D = _SQRT2PI * H ** (H + 0.5) / (c ** (H + 1.0) * (1.0 - H) ** (H + 0.5))
    E = 2.0 ** (0.5 - 1.0 / (2.0 * H)) * math.sqrt(math.pi) / math.sqrt(H * (1.0 - H))
    return {"C_H": C, "D_H": D, "E_H": E}


# ---------------------------------------------------------------------------
# the localized single sum (zero regime)


def _single_sum_terms(spec: ProcessSpec, u: float, delta: float):
    cq = core_quantities(spec, u)
    half_width = math.log(max(u, 2.0)) / math.sqrt(u)
    k_near = max(1, int(round(cq.t_u * u / delta)))
    k_lo = max(1, int(math.ceil((cq.t_u - half_width) * u / delta)))
    k_hi = int(math.floor((cq.t_u + half_width) * u / delta))
    if k_hi < k_lo:
        k_lo = k_hi = k_near
    k = np.arange(k_lo, k_hi + 1, dtype=float)
    s = k * delta  # original-time grid points near u t_u
    ratio = (u + spec.drift_c * s) / spec.variance.sigma(s)
    return log_ndtr(-ratio), int(len(k))


def single_sum_log(spec: ProcessSpec, u: float, delta: float) -> tuple[float, int]:
    """log of the localized sum of Psi(m(u)/sigma_Xu(t)), with the term count."""
    log_terms, n_terms = _single_sum_terms(spec, u, delta)
    return float(logsumexp(log_terms)), n_terms


def single_sum(spec: ProcessSpec, u: float, delta: float) -> float:
    """Localized sum of point exceedance masses near t_u (zero regime).

    May underflow to 0.0 for large u; use single_sum_log for ratio checks.
    """
    log_value, _ = single_sum_log(spec, u, delta)
    return math.exp(log_value)
