"""Exception hierarchy.

Every failure the library can diagnose maps to one subclass so the CLI can
translate cleanly: configuration problems exit 2, numerical failures exit 3.
"""


class GridStorageError(Exception):
    """Base class for package failures."""


class ConfigError(GridStorageError):
    """Invalid user-facing configuration (unknown keys, bad values)."""


class ClassificationError(GridStorageError):
    """Inconclusive regime classification; carries the probe trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class VarianceModelError(GridStorageError):
    """Variance function produced an invalid (indefinite) covariance."""


class QuadratureError(GridStorageError):
    """Adaptive quadrature did not reach the requested tolerance."""


class PathSynthesisError(GridStorageError):
    """Circulant embedding and dense factorization both failed."""


class HorizonError(GridStorageError):
    """Requested horizon exceeds the configured memory cap."""


class WindowError(GridStorageError):
    """Requested window does not fit inside the simulated horizon."""


class OptimizationError(GridStorageError):
    """Bracket minimization of the tail exponent failed."""


class InverseError(GridStorageError):
    """Monotone bisection for the asymptotic inverse failed."""


class UnsupportedRegimeError(GridStorageError):
    """alpha = 1/2 with vanishing phi: no asymptotic formula is implemented."""


class RateNotConvergedError(GridStorageError):
    """Pickands rate trace shows no plateau; carries the trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
