"""Reflected Gaussian processes on grids: simulation, asymptotics, validation.

The package revolves around the grid storage functional
Q(t) = sup_{s >= t, s on the grid} [X(s) - X(t) - c (s - t)] for a centered
Gaussian input X with stationary increments. It provides exact path
simulation, the analytic approximations of the exceedance probabilities in
all three growth regimes of sigma^2(t)/t, Monte Carlo estimation of the
Pickands-type constants entering those formulas, and a harness comparing
simulation against the analytics.
"""

from .asymptotics import (
    AsymptoticApproximation,
    CoreQuantities,
    NormalizedField,
    core_quantities,
    corollary_constants,
    normalized_field,
    predict_inf,
    predict_point,
    predict_prop1_bound,
    predict_sup,
    single_sum,
    single_sum_log,
    standard_normal_survival,
)
from .errors import (
    ClassificationError,
    ConfigError,
    GridStorageError,
    HorizonError,
    InverseError,
    OptimizationError,
    PathSynthesisError,
    QuadratureError,
    RateNotConvergedError,
    UnsupportedRegimeError,
    VarianceModelError,
    WindowError,
)
from .harness import (
    ComparisonRow,
    EstimateWithCI,
    ExperimentConfig,
    estimate_probabilities,
    ratio_trend,
)
from .pickands import (
    LabProcess,
    PickandsEstimate,
    estimate_G_window,
    estimate_H_rate,
    estimate_H_window,
    eta_process,
    fbm_exponent,
    window_covariance,
)
from .processes import (
    ProcessSpec,
    RegimeClass,
    VarianceFunction,
    classify_regime,
    covariance_increments,
    exponential_kernel,
    fbm_spec,
    integrated_lrd_spec,
    integrated_srd_spec,
    integrated_variance,
    power_kernel,
    spec_from_config,
    spec_to_config,
    srd_constants,
)
from .simulate import (
    GridSpec,
    IncrementSampler,
    PathSample,
    RngStream,
    dump_path_csv,
    required_horizon,
    simulate_fbm,
    simulate_integrated,
)
from .storage import StorageResult, storage_at_origin, storage_window, window_statistics

__version__ = "0.1.0"

__all__ = [
    "AsymptoticApproximation",
    "ClassificationError",
    "ComparisonRow",
    "ConfigError",
    "CoreQuantities",
    "EstimateWithCI",
    "ExperimentConfig",
    "GridSpec",
    "GridStorageError",
    "HorizonError",
    "IncrementSampler",
    "InverseError",
    "LabProcess",
    "NormalizedField",
    "OptimizationError",
    "PathSample",
    "PathSynthesisError",
    "PickandsEstimate",
    "ProcessSpec",
    "QuadratureError",
    "RateNotConvergedError",
    "RegimeClass",
    "RngStream",
    "StorageResult",
    "UnsupportedRegimeError",
    "VarianceFunction",
    "VarianceModelError",
    "WindowError",
    "classify_regime",
    "core_quantities",
    "corollary_constants",
    "covariance_increments",
    "dump_path_csv",
    "estimate_G_window",
    "estimate_H_rate",
    "estimate_H_window",
    "estimate_probabilities",
    "eta_process",
    "exponential_kernel",
    "fbm_exponent",
    "fbm_spec",
    "integrated_lrd_spec",
    "integrated_srd_spec",
    "integrated_variance",
    "normalized_field",
    "power_kernel",
    "predict_inf",
    "predict_point",
    "predict_prop1_bound",
    "predict_sup",
    "ratio_trend",
    "required_horizon",
    "simulate_fbm",
    "simulate_integrated",
    "single_sum",
    "single_sum_log",
    "spec_from_config",
    "spec_to_config",
    "srd_constants",
    "standard_normal_survival",
    "storage_at_origin",
    "storage_window",
    "window_covariance",
    "window_statistics",
]
