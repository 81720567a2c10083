"""Sharp partial-identification bounds and breakdown frontiers for the effect
of treatment-expansion policies on outcome quantiles, with bootstrap bands
and a synthetic-data oracle harness."""

__version__ = "0.1.0"

from .bootstrap import (
    BandCurve,
    BootstrapConfig,
    assign_policy,
    bootstrap_frontier,
    bootstrap_marginal_frontier,
    percentile_interval,
)
from .bounds import (
    ApparentPair,
    BoundsCurve,
    Conclusion,
    Diagnostic,
    FrontierCurve,
    apparent_pair,
    default_tau_grid,
    derived_bounds,
    frontier_slope_diagnostics,
    global_bounds_curve,
    global_effect_bounds,
    qbf,
    sharpness_diagnostic,
)
from .errors import ConfigError, DataError, DegeneracyError, QbfError
from .estimators import (
    BreakdownFrontier,
    DerivedBounds,
    FrontierBootstrap,
    GlobalEffectBounds,
    MarginalBreakdownFrontier,
    MarginalFrontierBootstrap,
    check_sample_inputs,
)
from .marginal import (
    DensityEstimate,
    IndifferencePmf,
    density_at_quantile,
    gaussian_density,
    indifference_pmf,
    marginal_effect_bounds,
    marginal_qbf,
    marginal_qbf_general,
)
from .sample import (
    PolicyAssignment,
    PolicySpec,
    Sample,
    ValidationReport,
    assign_randomized_policy,
    assign_threshold_policy,
    require_valid,
    validate_sample,
)
from .stepcdf import (
    NEG_INF,
    POS_INF,
    StepCdf,
    StepPmf,
    conditional_ecdf,
    ecdf_from_values,
    eval_cdf,
    mixture_cdf,
    pmf_from_rows,
    quantile,
)
from .synthetic import (
    BruteForceEvaluator,
    CoverageTable,
    DgpSpec,
    OracleReport,
    brute_force_bounds,
    coverage_study,
    derive_seed,
    generate_dgp,
    oracle_population_quantities,
    oracle_statistic,
)
