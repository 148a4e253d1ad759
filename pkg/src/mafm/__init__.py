"""Additive row/column factor models for matrix-valued time series.

Panels X_t decompose into a row-factor component F_t A', a column-factor
component B G_t', and noise. The package estimates the loading spaces by a
modewise eigendecomposition initialization refined through alternating
orthogonal-complement projections, recovers the factor series, quantifies
row-level uncertainty with plug-in covariance estimators, and ships Monte
Carlo and forecasting harnesses around the core fit.
"""

from .estimate import (
    DegenerateSignalError,
    MafmFit,
    compas,
    compas_partial,
    estimate_factors,
    fit_from_bases,
    fitted_values,
    mine,
)
from .experiments import (
    ExperimentGrid,
    run_coverage_experiment,
    run_error_experiment,
    run_normality_experiment,
)
from .infer import (
    IllConditionedInferenceError,
    LoadingInference,
    loading_row_ci,
    residual_series,
    sigma_a_hat,
    sigma_b_hat,
    sigma_f_hat,
    sigma_g_hat,
    standardized_row,
)
from .linalg import (
    Basis,
    orth_complement,
    procrustes_rotation,
    subspace_distance,
    top_eigvecs,
)
from .pipeline import (
    PanelSpec,
    fit_ar_aic,
    forecast_expanding,
    insample_stats,
    preprocess,
    rank_diagnostics,
    vec_factor_baseline,
)
from .synth import SimConfig, SimTruth, gen_loading, gen_var1_coeff, simulate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Basis",
    "DegenerateSignalError",
    "ExperimentGrid",
    "IllConditionedInferenceError",
    "LoadingInference",
    "MafmFit",
    "PanelSpec",
    "SimConfig",
    "SimTruth",
    "compas",
    "compas_partial",
    "estimate_factors",
    "fit_ar_aic",
    "fit_from_bases",
    "fitted_values",
    "forecast_expanding",
    "gen_loading",
    "gen_var1_coeff",
    "insample_stats",
    "loading_row_ci",
    "mine",
    "orth_complement",
    "preprocess",
    "procrustes_rotation",
    "rank_diagnostics",
    "residual_series",
    "run_coverage_experiment",
    "run_error_experiment",
    "run_normality_experiment",
    "sigma_a_hat",
    "sigma_b_hat",
    "sigma_f_hat",
    "sigma_g_hat",
    "simulate",
    "standardized_row",
    "subspace_distance",
    "top_eigvecs",
    "vec_factor_baseline",
]
