"""Transition kernels, parametrix series, and simulation tools for
singular diffusions with Bessel-type drift on the positive half-line.

The package is organised bottom-up:

- ``specfun``: gamma, modified Bessel, and Mittag-Leffler evaluation.
- ``kernels``: closed-form constant-coefficient transition densities.
- ``coeff``: coefficient fields b(t, x) with declared regularity data,
  plus a small catalog of test fields.
- ``parametrix``: the frozen-coefficient series construction of the
  variable-coefficient density, with certified truncation control and
  fitted two-sided comparison bounds.
- ``cauchy``: initial-value and forced problems driven by the series.
- ``montecarlo``: reflected Euler simulation as an independent
  stochastic oracle, with path statistics.
- ``verify``: named residual batteries with machine-readable reports.
- ``config`` / ``artifact`` / ``cli``: run configuration, on-disk
  solution artifacts, and the command-line entry point.
"""

from .errors import (
    VBesselError,
    DomainError,
    ParameterError,
    OverflowDomainError,
    ConvergenceError,
    GrowthError,
    SampleSizeError,
    StepSizeError,
    CatalogError,
    ConfigError,
    ArtifactError,
)
from .specfun import (
    gamma,
    log_gamma,
    bessel_i,
    bessel_i_scaled,
    bessel_i_deriv,
    bessel_i_deriv_scaled,
    mittag_leffler,
    mittag_leffler_log,
    g_alpha,
    g_alpha_log,
)
from .kernels import (
    KernelArgs,
    BoundParams,
    gauss_kernel,
    bessel_kernel,
    bessel_kernel_dx,
    reflected_bm_kernel,
    bound_kernel,
)
from .coeff import (
    CoefficientField,
    validate_bounds,
    estimate_holder,
    const_field,
    builtin_fields,
    get_field,
)
from .parametrix import (
    SpaceRule,
    TimeRule,
    QuadratureSpec,
    SeriesControl,
    PhiResult,
    FundamentalSolutionApprox,
    levi_kernel,
    convolve,
    phi_series,
    v_delta,
    assemble_fs,
    upper_bound,
    lower_bound,
    correction_majorant,
    fit_bound_params,
)
from .cauchy import (
    InitialData,
    SourceTerm,
    GrowthReport,
    check_growth,
    solve_homogeneous,
    solve_inhomogeneous,
)
from .montecarlo import (
    SimConfig,
    PathEnsemble,
    DensityTable,
    matched_sim_field,
    simulate,
    empirical_density,
    subgaussian_norm,
    modulus_stat,
    running_max_stat,
    ks_distance,
    cdf_from_density,
    dump_ensemble,
    read_ensemble_header,
)
from .verify import (
    CheckReport,
    check_normalization,
    check_chapman_kolmogorov,
    check_bessel_identity,
    check_pde_residual,
    check_reflection,
    check_bound_sandwich,
    check_constant_exactness,
    run_battery,
    BATTERY_NAMES,
)
from .config import (
    RunConfig,
    parse_config,
    serialize_config,
    parse_expression,
    format_expression,
    evaluate_expression,
    expression_field,
)
from .artifact import save_solution, load_solution

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "VBesselError",
    "DomainError",
    "ParameterError",
    "OverflowDomainError",
    "ConvergenceError",
    "GrowthError",
    "SampleSizeError",
    "StepSizeError",
    "CatalogError",
    "ConfigError",
    "ArtifactError",
    # specfun
    "gamma",
    "log_gamma",
    "bessel_i",
    "bessel_i_scaled",
    "bessel_i_deriv",
    "bessel_i_deriv_scaled",
    "mittag_leffler",
    "mittag_leffler_log",
    "g_alpha",
    "g_alpha_log",
    # kernels
    "KernelArgs",
    "BoundParams",
    "gauss_kernel",
    "bessel_kernel",
    "bessel_kernel_dx",
    "reflected_bm_kernel",
    "bound_kernel",
    # coeff
    "CoefficientField",
    "validate_bounds",
    "estimate_holder",
    "const_field",
    "builtin_fields",
    "get_field",
    # parametrix
    "SpaceRule",
    "TimeRule",
    "QuadratureSpec",
    "SeriesControl",
    "PhiResult",
    "FundamentalSolutionApprox",
    "levi_kernel",
    "convolve",
    "phi_series",
    "v_delta",
    "assemble_fs",
    "upper_bound",
    "lower_bound",
    "correction_majorant",
    "fit_bound_params",
    # cauchy
    "InitialData",
    "SourceTerm",
    "GrowthReport",
    "check_growth",
    "solve_homogeneous",
    "solve_inhomogeneous",
    # montecarlo
    "SimConfig",
    "PathEnsemble",
    "DensityTable",
    "matched_sim_field",
    "simulate",
    "empirical_density",
    "subgaussian_norm",
    "modulus_stat",
    "running_max_stat",
    "ks_distance",
    "cdf_from_density",
    "dump_ensemble",
    "read_ensemble_header",
    # verify
    "CheckReport",
    "check_normalization",
    "check_chapman_kolmogorov",
    "check_bessel_identity",
    "check_pde_residual",
    "check_reflection",
    "check_bound_sandwich",
    "check_constant_exactness",
    "run_battery",
    "BATTERY_NAMES",
    # config / artifacts
    "RunConfig",
    "parse_config",
    "serialize_config",
    "parse_expression",
    "format_expression",
    "evaluate_expression",
    "expression_field",
    "save_solution",
    "load_solution",
]
