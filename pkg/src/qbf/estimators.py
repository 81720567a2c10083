"""Estimator facades following the scikit-learn parameter protocol.

Each estimator stores hyperparameters verbatim in ``__init__`` (so
``get_params`` / ``set_params`` / ``clone`` work), validates inputs in
``fit(y, d, x=None, z=None)``, and exposes results as trailing-underscore
attributes. ``predict(taus)`` re-evaluates the fitted curve on a new grid.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .bootstrap import (
    BootstrapConfig,
    assign_policy,
    bootstrap_frontier,
    bootstrap_marginal_frontier,
)
from .bounds import (
    default_tau_grid,
    derived_bounds,
    global_bounds_curve,
    apparent_pair,
    qbf,
    sharpness_diagnostic,
)
from .errors import DataError
from .marginal import indifference_pmf, marginal_qbf
from .sample import PolicySpec, Sample, validate_sample
from .stepcdf import ecdf_from_values


def check_sample_inputs(y, d, x=None, z=None, support=None) -> tuple[Sample, np.ndarray | None]:
    """Coerce fit inputs into a validated :class:`Sample` (plus optional z)."""
    sample = Sample(y, d, x)
    report = validate_sample(sample, support)
    if report.errors:
        code, message = report.errors[0]
        raise DataError(code, message)
    if z is not None:
        z = np.asarray(z, dtype=np.float64).ravel()
        if z.size != sample.n:
            raise ValueError(f"z must have length {sample.n}, got {z.size}")
    return sample, z


def _fitted(estimator, attribute: str):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
    return getattr(estimator, attribute)


class _PolicyEstimator(BaseEstimator):
    """Shared fit plumbing for estimators that need a policy assignment."""

    def _prepare(self, y, d, x, z):
        sample, z = check_sample_inputs(y, d, x, z)
        policy = PolicySpec(self.policy, self.delta)
        assignment = assign_policy(sample, policy, z, seed=(self.seed, 0, 1))
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y, 1.0)
        taus = default_tau_grid(self.delta) if self.taus is None else np.asarray(self.taus, float)
        self.sample_ = sample
        self.assignment_ = assignment
        self.pair_ = pair
        self.f_y_ = f_y
        self.taus_ = taus
        return sample, pair, f_y, taus


class BreakdownFrontier(_PolicyEstimator):
    """Breakdown frontier of the policy selection bias for the global effect.

    Parameters
    ----------
    delta : treated-share expansion, strictly inside (0, 1 - p_hat)
    policy : "threshold" (rank controls on z, lowest shifted) or "randomized"
    g : conclusion threshold (scalar, or per-tau sequence)
    side : "lower" for 'effect >= g', "upper" for 'effect <= g'
    taus : quantile grid; None uses the default 71-point grid
    seed : stream seed for randomized policies
    """

    def __init__(self, delta=0.1, policy="threshold", g=0.1, side="lower", taus=None, seed=0):
        self.delta = delta
        self.policy = policy
        self.g = g
        self.side = side
        self.taus = taus
        self.seed = seed

    def fit(self, y, d, x=None, z=None):
        _, pair, f_y, taus = self._prepare(y, d, x, z)
        frontier = qbf(pair, f_y, taus, self.g, self.side)
        self.frontier_ = frontier
        self.c_raw_ = frontier.c_values
        self.c_clamped_ = frontier.clamped
        return self

    def predict(self, taus):
        pair = _fitted(self, "pair_")
        return qbf(pair, self.f_y_, taus, self.g, self.side).c_values


class GlobalEffectBounds(_PolicyEstimator):
    """Sharp lower/upper bounds on the global quantile effect at budget c."""

    def __init__(self, delta=0.1, policy="threshold", c=0.0, taus=None, seed=0):
        self.delta = delta
        self.policy = policy
        self.c = c
        self.taus = taus
        self.seed = seed

    def fit(self, y, d, x=None, z=None):
        _, pair, f_y, taus = self._prepare(y, d, x, z)
        curve = global_bounds_curve(pair, f_y, taus, self.c)
        self.curve_ = curve
        self.lower_ = curve.lower
        self.upper_ = curve.upper
        return self

    def predict(self, taus):
        pair = _fitted(self, "pair_")
        curve = global_bounds_curve(pair, self.f_y_, taus, self.c)
        return curve.lower, curve.upper


class DerivedBounds(_PolicyEstimator):
    """Bounds across the grid at the clamped frontier value of one tau_star."""

    def __init__(self, delta=0.1, policy="threshold", g=0.1, tau_star=0.3, taus=None, seed=0):
        self.delta = delta
        self.policy = policy
        self.g = g
        self.tau_star = tau_star
        self.taus = taus
        self.seed = seed

    def fit(self, y, d, x=None, z=None):
        _, pair, f_y, taus = self._prepare(y, d, x, z)
        curve = derived_bounds(pair, f_y, self.tau_star, self.g, taus)
        self.curve_ = curve
        self.c_tilde_ = curve.c
        self.lower_ = curve.lower
        self.upper_ = curve.upper
        self.diagnostic_ = sharpness_diagnostic(pair, f_y, self.tau_star, curve.c)
        return self

    def predict(self, taus):
        pair = _fitted(self, "pair_")
        curve = global_bounds_curve(pair, self.f_y_, taus, self.c_tilde_)
        return curve.lower, curve.upper


class MarginalBreakdownFrontier(BaseEstimator):
    """Breakdown frontier for the sign of the marginal effect.

    ``alpha`` mixes the treated (alpha = 1) and control (alpha = 0) covariate
    distributions to model the rows at the margin of indifference; any
    alpha != 1 carries misspecification risk.
    """

    def __init__(self, alpha=1.0, taus=None):
        self.alpha = alpha
        self.taus = taus

    def fit(self, y, d, x=None):
        sample, _ = check_sample_inputs(y, d, x)
        taus = default_tau_grid(0.0) if self.taus is None else np.asarray(self.taus, float)
        self.sample_ = sample
        self.ipmf_ = indifference_pmf(sample, self.alpha)
        frontier = marginal_qbf(sample, self.ipmf_, taus)
        self.taus_ = taus
        self.frontier_ = frontier
        self.c_values_ = frontier.c_values
        return self

    def predict(self, taus):
        sample = _fitted(self, "sample_")
        return marginal_qbf(sample, self.ipmf_, taus).c_values


class FrontierBootstrap(_PolicyEstimator):
    """Pointwise percentile band for the global-effect frontier."""

    def __init__(
        self,
        delta=0.1,
        policy="threshold",
        g=0.1,
        side="lower",
        taus=None,
        replications=1000,
        level=0.95,
        seed=0,
        freeze_assignment=False,
    ):
        self.delta = delta
        self.policy = policy
        self.g = g
        self.side = side
        self.taus = taus
        self.replications = replications
        self.level = level
        self.seed = seed
        self.freeze_assignment = freeze_assignment

    def fit(self, y, d, x=None, z=None):
        sample, z = check_sample_inputs(y, d, x, z)
        taus = default_tau_grid(self.delta) if self.taus is None else np.asarray(self.taus, float)
        cfg = BootstrapConfig(
            replications=self.replications,
            level=self.level,
            seed=self.seed,
            freeze_assignment=self.freeze_assignment,
        )
        band = bootstrap_frontier(
            sample, PolicySpec(self.policy, self.delta), self.g, self.side, taus, cfg, z=z
        )
        self.taus_ = taus
        self.band_ = band
        self.point_ = band.point
        self.lo_ = band.lo
        self.hi_ = band.hi
        return self


class MarginalFrontierBootstrap(BaseEstimator):
    """Pointwise percentile band for the marginal-effect frontier."""

    def __init__(self, alpha=1.0, taus=None, replications=1000, level=0.95, seed=0):
        self.alpha = alpha
        self.taus = taus
        self.replications = replications
        self.level = level
        self.seed = seed

    def fit(self, y, d, x=None):
        sample, _ = check_sample_inputs(y, d, x)
        taus = default_tau_grid(0.0) if self.taus is None else np.asarray(self.taus, float)
        cfg = BootstrapConfig(replications=self.replications, level=self.level, seed=self.seed)
        band = bootstrap_marginal_frontier(sample, self.alpha, taus, cfg)
        self.taus_ = taus
        self.band_ = band
        self.point_ = band.point
        self.lo_ = band.lo
        self.hi_ = band.hi
        return self
