"""Marginal-effect machinery: the indifference-margin covariate mixture, the
marginal breakdown frontier, density-normalized sharp bounds, and the
general-threshold frontier.

The marginal effect is the delta -> 0 limit of the global effect per unit of
expansion. Its frontier needs the covariate distribution of the rows at the
margin of indifference, modeled as an alpha-mixture of the treated and
control covariate frequencies; alpha is user-supplied and any choice carries
misspecification risk when it differs from 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import Conclusion, FrontierCurve
from .errors import ConfigError, DataError, DegeneracyError
from .sample import Sample
from .stepcdf import StepPmf, conditional_ecdf, ecdf_from_values, eval_cdf, pmf_from_rows, quantile

AUTO = "auto"


@dataclass(frozen=True)
class IndifferencePmf:
    """Alpha-mixture of the treated and control covariate frequencies."""

    alpha: float
    atoms: StepPmf


@dataclass(frozen=True)
class DensityEstimate:
    """A nonnegative density evaluator with its bandwidth."""

    bandwidth: float
    evaluator: Callable[[float], float]


def indifference_pmf(sample: Sample, alpha: float) -> IndifferencePmf:
    """Convex combination alpha * pmf(x | d=1) + (1 - alpha) * pmf(x | d=0)."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError("ALPHA_OUT_OF_RANGE", f"alpha must lie in [0, 1], got {alpha!r}")
    treated = pmf_from_rows(sample, sample.d == 1)
    control = pmf_from_rows(sample, sample.d == 0)
    cells = sorted(set(treated.atoms) | set(control.atoms))
    atoms = {}
    for cell in cells:
        weight = alpha * treated.atoms.get(cell, 0.0) + (1.0 - alpha) * control.atoms.get(cell, 0.0)
        if weight > 0.0:
            atoms[cell] = weight
    return IndifferencePmf(alpha=alpha, atoms=StepPmf(atoms))


def _cell_level_sum(sample: Sample, weights: dict, q: np.ndarray) -> np.ndarray:
    """Sum over cells of F_hat(Y | d=1, cell)(q) times the cell weight."""
    acc = np.zeros_like(q)
    for cell, w in weights.items():
        f1x = conditional_ecdf(sample, "D=1,X=x", x=cell)
        acc = acc + w * eval_cdf(f1x, q)
    return acc


def marginal_qbf(sample: Sample, ipmf: IndifferencePmf, taus) -> FrontierCurve:
    """Breakdown frontier for the sign of the marginal effect.

    Per tau: the matched-proxy CDF level at the observed tau-quantile minus
    the control CDF level there. No density appears, so the estimator stays
    root-n consistent. The value is linear in alpha by construction: it is
    computed as the alpha-combination of the two endpoint frontiers.
    """
    taus = np.asarray(taus, dtype=np.float64).ravel()
    if np.any(taus <= 0.0) or np.any(taus >= 1.0):
        raise ConfigError("TAU_OUT_OF_RANGE", "taus must lie strictly inside (0, 1)")
    f_y = ecdf_from_values(sample.y, 1.0)
    f0 = conditional_ecdf(sample, "D=0")
    q = quantile(f_y, taus)
    control_levels = eval_cdf(f0, q)
    alpha = ipmf.alpha
    if alpha > 0.0:
        treated_pmf = pmf_from_rows(sample, sample.d == 1)
        c_treated = _cell_level_sum(sample, treated_pmf.atoms, q) - control_levels
    if alpha < 1.0:
        control_pmf = pmf_from_rows(sample, sample.d == 0)
        c_control = _cell_level_sum(sample, control_pmf.atoms, q) - control_levels
    if alpha == 1.0:
        c_values = c_treated
    elif alpha == 0.0:
        c_values = c_control
    else:
        c_values = alpha * c_treated + (1.0 - alpha) * c_control
    clamped = np.minimum(np.maximum(c_values, 0.0), 1.0)
    return FrontierCurve(
        taus=taus, c_values=c_values, clamped=clamped, side=Conclusion.UPPER, g=0.0
    )


def gaussian_density(values, bandwidth=AUTO) -> DensityEstimate:
    """Gaussian-kernel density with the Silverman rule-of-thumb bandwidth
    1.06 * sigma_hat * n^(-1/5) when ``bandwidth="auto"``.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size < 2:
        raise DataError("TOO_SMALL", "density estimation needs at least 2 values")
    if bandwidth == AUTO:
        sigma = float(vals.std(ddof=1))
        if sigma == 0.0:
            raise DegeneracyError("DEGENERATE_OUTCOME", "all outcome values are equal")
        bandwidth = 1.06 * sigma * vals.size ** (-0.2)
    else:
        bandwidth = float(bandwidth)
        if not bandwidth > 0.0:
            raise ConfigError(
                "BANDWIDTH_NONPOSITIVE", f"bandwidth must be positive, got {bandwidth!r}"
            )

    norm = 1.0 / (vals.size * bandwidth * math.sqrt(2.0 * math.pi))

    def evaluator(y: float) -> float:
        z = (float(y) - vals) / bandwidth
        return float(norm * np.exp(-0.5 * z * z).sum())

    return DensityEstimate(bandwidth=float(bandwidth), evaluator=evaluator)


def density_at_quantile(sample: Sample, tau: float, bandwidth=AUTO) -> float:
    """Kernel density of the outcome evaluated at its empirical tau-quantile."""
    if sample.n < 10:
        raise DataError("TOO_SMALL", f"need at least 10 rows, got {sample.n}")
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ConfigError("TAU_OUT_OF_RANGE", f"tau must lie in (0, 1), got {tau!r}")
    q = quantile(ecdf_from_values(sample.y, 1.0), tau)
    return gaussian_density(sample.y, bandwidth).evaluator(q)


def marginal_effect_bounds(
    sample: Sample, ipmf: IndifferencePmf, tau: float, c: float, density: float
) -> tuple[float, float]:
    """Sharp bounds on the marginal effect at one tau.

    Both ends share the denominator ``density`` (the outcome density at the
    tau-quantile); the c-branches move the matched-proxy level by +/- c and
    the outer envelope comes from the proxy level leaving [0, 1].
    """
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ConfigError("TAU_OUT_OF_RANGE", f"tau must lie in (0, 1), got {tau!r}")
    c = float(c)
    if not 0.0 <= c <= 1.0:
        raise ConfigError("C_OUT_OF_RANGE", f"c must lie in [0, 1], got {c!r}")
    density = float(density)
    if not density > 0.0:
        raise DegeneracyError("ZERO_DENSITY", f"density must be positive, got {density!r}")
    q = quantile(ecdf_from_values(sample.y, 1.0), tau)
    control_level = eval_cdf(conditional_ecdf(sample, "D=0"), q)
    proxy_level = float(_cell_level_sum(sample, ipmf.atoms.atoms, np.asarray([q]))[0])
    lower = max(
        (control_level - 1.0) / density,
        (control_level - proxy_level - c) / density,
    )
    upper = min(
        control_level / density,
        (control_level - proxy_level + c) / density,
    )
    return lower, upper


def marginal_qbf_general(
    sample: Sample, ipmf: IndifferencePmf, taus, m: float, densities
) -> FrontierCurve:
    """Frontier for the conclusion 'marginal effect <= m'.

    Adds ``density * m`` pointwise to the m = 0 frontier; reduces to
    :func:`marginal_qbf` exactly when m = 0. ``densities`` supplies the
    outcome density at each tau-quantile (scalar or per-tau sequence).
    """
    base = marginal_qbf(sample, ipmf, taus)
    dens = np.broadcast_to(np.asarray(densities, dtype=np.float64), base.taus.shape)
    if np.any(dens <= 0.0) or not np.all(np.isfinite(dens)):
        raise DegeneracyError("ZERO_DENSITY", "densities must be positive and finite")
    c_values = dens * float(m) + base.c_values
    clamped = np.minimum(np.maximum(c_values, 0.0), 1.0)
    return FrontierCurve(
        taus=base.taus, c_values=c_values, clamped=clamped, side=Conclusion.UPPER, g=float(m)
    )
