"""Apparent distributions, sharp bounds on the global quantile effect, and
the breakdown frontier for the policy selection bias.

The counterfactual outcome distribution decomposes into an identified part
(the treated arm plus the rows the policy leaves untreated) and the unknown
distribution of the newly treated rows. Replacing the unknown part with its
covariate-matched proxy built from already-treated rows gives the apparent
distribution ``f_a`` (mass 1); dropping it entirely gives the incomplete
apparent distribution ``f_a_tilde`` (mass 1 - delta). A selection-bias budget
``c`` (a Kolmogorov-Smirnov distance) turns those into sharp quantile bounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError
from .sample import PolicyAssignment, Sample
from .stepcdf import (
    StepCdf,
    conditional_ecdf,
    eval_cdf,
    mixture_cdf,
    pmf_from_rows,
    quantile,
)


class Conclusion(str, Enum):
    """Direction of the target conclusion the frontier protects."""

    LOWER = "lower"  # effect >= g
    UPPER = "upper"  # effect <= g


class Diagnostic(str, Enum):
    """Whether the selection-bias budget actually binds the lower bound."""

    C_BINDING = "C_BINDING"
    C_SLACK = "C_SLACK"


@dataclass(frozen=True)
class ApparentPair:
    """Apparent and incomplete apparent distributions for one policy."""

    f_a: StepCdf
    f_a_tilde: StepCdf
    delta: float
    p_hat: float


@dataclass(frozen=True)
class BoundsCurve:
    """Lower/upper bound values over a quantile grid, at bias budget ``c``."""

    taus: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    c: float


@dataclass(frozen=True)
class FrontierCurve:
    """Breakdown-frontier values over a quantile grid.

    ``c_values`` are the raw frontier values (informative even outside
    [0, 1]); ``clamped`` restricts them to [0, 1].
    """

    taus: np.ndarray
    c_values: np.ndarray
    clamped: np.ndarray
    side: Conclusion
    g: float | np.ndarray


def apparent_pair(sample: Sample, assignment: PolicyAssignment) -> ApparentPair:
    """Build the apparent pair from a sample and a policy assignment.

    The newly-treated proxy mixes the per-cell treated ECDFs with the
    empirical covariate frequencies of the newly treated rows, so every cell
    that appears among the newly treated must contain treated rows.
    """
    newly = (sample.d == 0) & (assignment.d_delta == 1)
    if not newly.any():
        raise DataError("NO_NEWLY_TREATED", "the assignment shifts no rows")
    f1 = conditional_ecdf(sample, "D=1")
    f0d = conditional_ecdf(sample, "D_delta=0", assignment=assignment)
    p_x = pmf_from_rows(sample, newly)
    proxy = mixture_cdf(
        [
            (conditional_ecdf(sample, "D=1,X=x", x=cell), weight)
            for cell, weight in p_x.atoms.items()
        ]
    )
    p_hat = sample.p_hat
    delta = float(assignment.delta)
    f_a_tilde = mixture_cdf([(f1, p_hat), (f0d, 1.0 - p_hat - delta)])
    f_a = mixture_cdf([(f_a_tilde, 1.0), (proxy, delta)])
    return ApparentPair(f_a=f_a, f_a_tilde=f_a_tilde, delta=delta, p_hat=p_hat)


def _check_tau(tau: float, delta: float) -> float:
    tau = float(tau)
    if not delta < tau < 1.0 - delta:
        raise ConfigError(
            "TAU_OUT_OF_RANGE",
            f"tau must lie strictly inside (delta, 1 - delta) = ({delta!r}, {1.0 - delta!r}), got {tau!r}",
        )
    return tau


def _check_c(c: float) -> float:
    c = float(c)
    if not 0.0 <= c <= 1.0:
        raise ConfigError("C_OUT_OF_RANGE", f"c must lie in [0, 1], got {c!r}")
    return c


def global_effect_bounds(
    pair: ApparentPair, f_y: StepCdf, tau: float, c: float
) -> tuple[float, float]:
    """Sharp bounds on the quantile effect at one tau and bias budget c.

    Lower bound: max of the incomplete-apparent inverse at tau - delta and
    the apparent inverse at tau - delta*c, minus the observed tau-quantile;
    the upper bound is the mirrored min. Infinite sentinels propagate.
    """
    tau = _check_tau(tau, pair.delta)
    c = _check_c(c)
    q_y = quantile(f_y, tau)
    lower = max(
        quantile(pair.f_a_tilde, tau - pair.delta),
        quantile(pair.f_a, tau - pair.delta * c),
    )
    upper = min(
        quantile(pair.f_a_tilde, tau),
        quantile(pair.f_a, tau + pair.delta * c),
    )
    return lower - q_y, upper - q_y


def global_bounds_curve(pair: ApparentPair, f_y: StepCdf, taus, c: float) -> BoundsCurve:
    """Elementwise :func:`global_effect_bounds` over a tau grid."""
    taus = np.asarray(taus, dtype=np.float64).ravel()
    lower = np.empty_like(taus)
    upper = np.empty_like(taus)
    for i, tau in enumerate(taus):
        lower[i], upper[i] = global_effect_bounds(pair, f_y, tau, c)
    return BoundsCurve(taus=taus, lower=lower, upper=upper, c=float(c))


def qbf(
    pair: ApparentPair,
    f_y: StepCdf,
    taus,
    g,
    side: Conclusion | str = Conclusion.LOWER,
) -> FrontierCurve:
    """Breakdown frontier: the largest bias budget c at which the target
    conclusion still holds, per tau.

    For the lower conclusion (effect >= g) the raw value is
    ``(tau - F_a(F_y^{-1}(tau) + g)) / delta``; the upper conclusion negates
    the numerator. ``g`` may be a scalar or a per-tau sequence (the scalar
    case is the one backed by inference theory).
    """
    side = Conclusion(side)
    taus = np.asarray(taus, dtype=np.float64).ravel()
    for tau in taus:
        _check_tau(tau, pair.delta)
    g_arr = np.broadcast_to(np.asarray(g, dtype=np.float64), taus.shape)
    if not np.all(np.isfinite(g_arr)):
        raise ConfigError("G_NOT_FINITE", "the conclusion threshold g must be finite")
    q = quantile(f_y, taus)
    levels = eval_cdf(pair.f_a, q + g_arr)
    if side is Conclusion.LOWER:
        c_values = (taus - levels) / pair.delta
    else:
        c_values = (levels - taus) / pair.delta
    clamped = np.minimum(np.maximum(c_values, 0.0), 1.0)
    g_out = float(g) if np.ndim(g) == 0 else np.asarray(g, dtype=np.float64)
    return FrontierCurve(taus=taus, c_values=c_values, clamped=clamped, side=side, g=g_out)


def derived_bounds(
    pair: ApparentPair, f_y: StepCdf, tau_star: float, g: float, taus
) -> BoundsCurve:
    """Global bounds across the grid at the clamped frontier value of tau_star.

    The frontier at a single quantile of interest fixes a bias budget; the
    returned curve extends that budget to every tau. The budget (clamped to
    [0, 1]) is stored in the curve's ``c`` field.
    """
    frontier = qbf(pair, f_y, np.asarray([tau_star], dtype=np.float64), g, Conclusion.LOWER)
    c_tilde = float(frontier.clamped[0])
    return global_bounds_curve(pair, f_y, taus, c_tilde)


def sharpness_diagnostic(
    pair: ApparentPair, f_y: StepCdf, tau: float, c_frontier: float
) -> Diagnostic:
    """Report whether the frontier value actually binds at ``tau``.

    When the incomplete-apparent branch of the lower bound dominates the
    apparent branch evaluated at the frontier value, the conclusion holds for
    every c in [0, 1] (slack); otherwise the conclusion holds only up to the
    frontier value (binding).
    """
    tau = _check_tau(tau, pair.delta)
    tilde_branch = quantile(pair.f_a_tilde, tau - pair.delta)
    apparent_branch = quantile(pair.f_a, tau - pair.delta * c_frontier)
    return Diagnostic.C_SLACK if tilde_branch >= apparent_branch else Diagnostic.C_BINDING


def frontier_slope_diagnostics(
    frontier: FrontierCurve, pair: ApparentPair, f_y: StepCdf, dg: float
) -> np.ndarray:
    """Forward finite-difference slope of the frontier in g, per tau.

    For the lower conclusion every entry is <= 0: relaxing the conclusion
    moves the frontier up.
    """
    if not dg > 0.0:
        raise ValueError(f"dg must be positive, got {dg!r}")
    bumped = qbf(pair, f_y, frontier.taus, np.asarray(frontier.g) + dg, frontier.side)
    return (bumped.c_values - frontier.c_values) / dg


def default_tau_grid(delta: float, points: int = 71) -> np.ndarray:
    """Equispaced grid on [max(delta+0.01, 0.15), min(1-delta-0.01, 0.85)]."""
    lo = max(delta + 0.01, 0.15)
    hi = min(1.0 - delta - 0.01, 0.85)
    if not lo < hi:
        raise ConfigError(
            "TAU_GRID_EMPTY", f"no admissible tau grid for delta={delta!r}"
        )
    return np.linspace(lo, hi, points)
