"""Kernel density goodness-of-fit tests for the residuals of AR(p) processes,
across stable, unit-root and explosive regimes."""

__version__ = "0.1.0"

from .ar import MODELS, ArModel, TimeSeries, char_poly_roots, classify, companion_matrix, get_model, simulate
from .errors import (
    BrArError,
    CalibrationError,
    DegenerateVarianceError,
    InapplicableKernelError,
    ParameterError,
    QuadratureError,
    RetryableError,
    RetryLimitExceeded,
    SimulationOverflow,
    SingularFitError,
)
from .estimation import OlsFit, ResidualSet, fit_residuals, ols_estimate, residuals
from .gof import (
    TestConfig,
    TestReport,
    br_gof_test,
    delta_distance,
    ks_test,
    normal_quantile,
    rw_variant_statistic,
    wiener_functional_quantiles,
)
from .kde import Bandwidth, Kernel, exponential_kernel, gaussian_kernel, get_kernel, make_smoothed_uniform, pr_density
from .montecarlo import (
    McConfig,
    McReport,
    RateReport,
    asym_kernel_experiment,
    calibrate_h0,
    empirical_level,
    empirical_power,
    power_sweep,
    rate_check,
)
from .noise import NoiseSpec, parse_noise
from .statistic import BrReport, WeightFn, centering_mu, t_hat, t_tilde, variance_tau2
