"""Bayes-factor control charts for autocorrelated multivariate processes.

A discount-weighted local level filter produces one-step predictive error
densities; the log Bayes factor of the predictive vs a target error density
is monitored with a modified EWMA chart whose limits are calibrated by
Monte Carlo to a target in-control average run length.
"""

from ._accel import USING_NUMBA
from .bayesfactor import TargetSpec, bf, lbf, lbf_series
from .chart import (
    Ar1Model,
    CalibrationResult,
    ChartConfig,
    ChartPoint,
    RunLength,
    asymptotic_sigma_z2,
    calibrate_c,
    design_chart,
    estimate_arl,
    ewma_update,
    fit_ar1,
    run_chart,
    simulate_run_length,
)
from .diagnostics import (
    FitReport,
    fit_report,
    lag1_autocorr,
    mae,
    mape,
    msse,
    skewness,
    standardize_errors,
)
from .dwr import (
    DwrConfig,
    FilterState,
    ForecastErrorDensity,
    forecast_error_density,
    init,
    run_filter,
    scale_sequence,
    steady_state_mean,
    steady_state_scale,
)
from .exceptions import (
    BfchartError,
    BracketFailure,
    CovarianceNotReady,
    DegenerateFit,
    DimensionMismatch,
    EmptyInput,
    InvalidConfig,
    NonStationary,
    NotPositiveDefinite,
    SchemaMismatch,
    TooShort,
    ZeroVariance,
)
from .linalg import (
    cholesky,
    log_det,
    make_rng,
    quad_form,
    sample_mvn,
    sym_inv_sqrt,
)
from .simulate import (
    Scenario,
    gen_ar1,
    gen_iid,
    gen_local_level,
    level_noise_scale,
    reference_scenarios,
    scenario_lbf_study,
)
from .workflow import (
    FittedModel,
    MonitorResult,
    difference,
    estimate_target,
    phase1,
    phase2,
)

__version__ = "0.1.0"
