"""Empirical bootstrap for frontier curves with pointwise percentile bands.

Each replicate resamples rows with replacement and re-runs the full pipeline:
the policy is re-assigned on the resample (a threshold is recomputed, a
randomized draw is redrawn from its own substream), the apparent pair is
rebuilt, and the frontier re-estimated. Replicate b draws only from streams
keyed by (seed, b), so results are reproducible and independent of execution
order. Replicates that fail on small-cell problems are dropped and counted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import Conclusion, apparent_pair, qbf
from .errors import ConfigError, DataError, DegeneracyError, QbfError
from .marginal import indifference_pmf, marginal_qbf
from .sample import (
    PolicyAssignment,
    PolicySpec,
    Sample,
    assign_randomized_policy,
    assign_threshold_policy,
)
from .stepcdf import ecdf_from_values, quantile

MAX_FAILURE_SHARE = 0.10


@dataclass(frozen=True)
class BootstrapConfig:
    """Replication count, band level, and the seed of the replicate streams."""

    replications: int = 1000
    level: float = 0.95
    seed: int = 0
    freeze_assignment: bool = False

    def __post_init__(self):
        if int(self.replications) < 2:
            raise ConfigError(
                "REPLICATIONS_TOO_FEW", f"need at least 2 replications, got {self.replications}"
            )
        if not 0.0 < self.level < 1.0:
            raise ConfigError("LEVEL_OUT_OF_RANGE", f"level must lie in (0, 1), got {self.level!r}")
        if int(self.seed) < 0:
            raise ConfigError("SEED_NEGATIVE", f"seed must be nonnegative, got {self.seed!r}")


@dataclass(frozen=True)
class BandCurve:
    """Point estimate with pointwise lo/hi percentile bounds per tau."""

    taus: np.ndarray
    point: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    failures: int = 0


def percentile_interval(draws, level: float) -> tuple[float, float]:
    """Empirical quantiles at (1 - level)/2 and 1 - (1 - level)/2, type-1."""
    draws = np.asarray(draws, dtype=np.float64).ravel()
    if draws.size == 0:
        raise DataError("EMPTY_INPUT", "no draws to form an interval from")
    if not 0.0 < level < 1.0:
        raise ConfigError("LEVEL_OUT_OF_RANGE", f"level must lie in (0, 1), got {level!r}")
    f = ecdf_from_values(draws, 1.0)
    half_tail = (1.0 - level) / 2.0
    return float(quantile(f, half_tail)), float(quantile(f, 1.0 - half_tail))


def assign_policy(sample: Sample, policy: PolicySpec, z=None, seed=0) -> PolicyAssignment:
    """Dispatch a policy spec to its assignment routine.

    For threshold policies ``z`` defaults to the outcome when the policy's
    ``z_source`` is ``"y"``.
    """
    if policy.kind == "threshold":
        if z is None:
            if policy.z_source != "y":
                raise ConfigError(
                    "Z_MISSING", f"threshold policy ranks on {policy.z_source!r}; pass z explicitly"
                )
            z = sample.y
        return assign_threshold_policy(sample, policy.delta, z)
    return assign_randomized_policy(sample, policy.delta, seed)


def _band_from_draws(taus, point, draws, failures, cfg) -> BandCurve:
    lo = np.empty(taus.size)
    hi = np.empty(taus.size)
    for i in range(taus.size):
        lo[i], hi[i] = percentile_interval(draws[:, i], cfg.level)
    return BandCurve(taus=taus, point=point, lo=lo, hi=hi, failures=failures)


def bootstrap_frontier(
    sample: Sample,
    policy: PolicySpec,
    g,
    side: Conclusion | str,
    taus,
    cfg: BootstrapConfig,
    z=None,
) -> BandCurve:
    """Pointwise percentile band for the global-effect breakdown frontier.

    The point estimate is the full-sample frontier (raw values, not clamped;
    clamping is a kink where percentile resampling is unreliable). With
    ``cfg.freeze_assignment`` the original row assignments are resampled
    jointly with the rows instead of re-running the policy.
    """
    taus = np.asarray(taus, dtype=np.float64).ravel()
    z_values = None
    if policy.kind == "threshold":
        z_values = sample.y if z is None and policy.z_source == "y" else np.asarray(z, np.float64)
    point_assignment = assign_policy(sample, policy, z_values, seed=(cfg.seed, 0, 1))
    f_y = ecdf_from_values(sample.y, 1.0)
    point = qbf(apparent_pair(sample, point_assignment), f_y, taus, g, side).c_values

    n = sample.n
    reps = int(cfg.replications)
    draws = np.empty((reps, taus.size))
    kept = 0
    failures = 0
    for b in range(1, reps + 1):
        idx = np.random.default_rng((cfg.seed, b)).integers(0, n, size=n)
        boot = Sample(sample.y[idx], sample.d[idx], sample.x[idx])
        try:
            if cfg.freeze_assignment:
                assignment = PolicyAssignment.from_d_delta(
                    point_assignment.d_delta[idx], policy.delta
                )
            else:
                z_boot = z_values[idx] if z_values is not None else None
                assignment = assign_policy(boot, policy, z_boot, seed=(cfg.seed, b, 1))
            pair = apparent_pair(boot, assignment)
            curve = qbf(pair, ecdf_from_values(boot.y, 1.0), taus, g, side)
        except QbfError:
            failures += 1
            continue
        draws[kept] = curve.c_values
        kept += 1
    if failures > MAX_FAILURE_SHARE * reps:
        raise DegeneracyError(
            "BOOTSTRAP_DEGENERATE",
            f"{failures} of {reps} bootstrap replicates failed",
        )
    return _band_from_draws(taus, point, draws[:kept], failures, cfg)


def bootstrap_marginal_frontier(
    sample: Sample, alpha: float, taus, cfg: BootstrapConfig
) -> BandCurve:
    """Pointwise percentile band for the marginal-effect frontier."""
    taus = np.asarray(taus, dtype=np.float64).ravel()
    point = marginal_qbf(sample, indifference_pmf(sample, alpha), taus).c_values

    n = sample.n
    reps = int(cfg.replications)
    draws = np.empty((reps, taus.size))
    kept = 0
    failures = 0
    for b in range(1, reps + 1):
        idx = np.random.default_rng((cfg.seed, b)).integers(0, n, size=n)
        boot = Sample(sample.y[idx], sample.d[idx], sample.x[idx])
        try:
            curve = marginal_qbf(boot, indifference_pmf(boot, alpha), taus)
        except QbfError:
            failures += 1
            continue
        draws[kept] = curve.c_values
        kept += 1
    if failures > MAX_FAILURE_SHARE * reps:
        raise DegeneracyError(
            "BOOTSTRAP_DEGENERATE",
            f"{failures} of {reps} bootstrap replicates failed",
        )
    return _band_from_draws(taus, point, draws[:kept], failures, cfg)
