"""Micro-data container, validation, and counterfactual policy assignment.

A policy expands the treated share by ``delta``: every treated row stays
treated and some control rows are shifted to treatment, so the assignment is
monotone (``d_delta >= d`` row by row). ``delta`` is measured against the
empirical treated share ``p_hat``, which is what every downstream formula
uses.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .stepcdf import ecdf_from_values, quantile

POLICY_KINDS = ("randomized", "threshold")


@dataclass(frozen=True)
class Sample:
    """Observed rows: outcome ``y``, treatment flag ``d``, covariate codes ``x``.

    ``x`` is an (n, k) integer array of covariate cells; k may be zero, in
    which case all rows share the single empty cell ``()``.
    """

    y: np.ndarray
    d: np.ndarray
    x: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64).ravel()
        d = np.asarray(self.d)
        if d.dtype == bool:
            d = d.astype(np.int8)
        d = d.ravel()
        if d.size and not np.isin(np.unique(d), (0, 1)).all():
            raise ValueError("d must contain only 0/1 values")
        d = d.astype(np.int8)
        x = self.x
        if x is None:
            x = np.zeros((y.size, 0), dtype=np.int64)
        else:
            x = np.asarray(x)
            if x.ndim == 1:
                x = x.reshape(-1, 1)
            if x.ndim != 2:
                raise ValueError("x must be a 1-D or 2-D array of covariate codes")
            if x.size and not np.array_equal(x, x.astype(np.int64)):
                raise ValueError("covariate codes must be integers")
            x = x.astype(np.int64)
        if not (y.size == d.size == x.shape[0]):
            raise ValueError(
                f"column lengths differ: y has {y.size}, d has {d.size}, x has {x.shape[0]}"
            )
        for arr in (y, d, x):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def n_treated(self) -> int:
        return int(self.d.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated

    @property
    def p_hat(self) -> float:
        return float(self.d.mean())

    def cells(self) -> list[tuple]:
        """Observed covariate cells, lexicographically sorted."""
        uniq = np.unique(self.x, axis=0)
        return [tuple(int(v) for v in row) for row in uniq]


@dataclass(frozen=True)
class PolicySpec:
    """A counterfactual treatment-expansion policy.

    ``kind`` is ``"randomized"`` (controls drawn at random) or ``"threshold"``
    (controls with the lowest ranking variable z are shifted). ``z_source``
    names the ranking column for threshold policies; ``"y"`` ranks on the
    outcome itself.
    """

    kind: str
    delta: float
    z_source: str = "y"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(
                "POLICY_UNKNOWN", f"policy kind must be one of {POLICY_KINDS}, got {self.kind!r}"
            )
        if not np.isfinite(self.delta) or not 0.0 < self.delta < 1.0:
            raise ConfigError(
                "DELTA_OUT_OF_RANGE", f"delta must lie strictly inside (0, 1), got {self.delta!r}"
            )


@dataclass(frozen=True)
class PolicyAssignment:
    """Row-level counterfactual treatment produced by a policy."""

    d_delta: np.ndarray
    delta: float
    realized_rate: float

    def __post_init__(self):
        dd = np.asarray(self.d_delta).astype(np.int8).ravel()
        dd.setflags(write=False)
        object.__setattr__(self, "d_delta", dd)

    @classmethod
    def from_d_delta(cls, d_delta, delta: float) -> "PolicyAssignment":
        dd = np.asarray(d_delta).astype(np.int8).ravel()
        return cls(dd, float(delta), float(dd.mean()))


@dataclass
class ValidationReport:
    """Collected (code, message) pairs; empty ``errors`` means admissible."""

    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _normalize_support(support, width: int) -> set[tuple]:
    cells = set()
    for cell in support:
        if np.ndim(cell) == 0:
            cell = (cell,)
        tup = tuple(int(v) for v in cell)
        if len(tup) != width:
            raise ValueError(
                f"support cell {tup!r} has {len(tup)} components, expected {width}"
            )
        cells.add(tup)
    return cells


def validate_sample(sample: Sample, support: Iterable | None = None) -> ValidationReport:
    """Check the admissibility invariants; failures land in the report.

    ``support`` declares the finite covariate support; when omitted it is
    inferred as the set of observed cells. A covariate cell with no treated
    row only warns, because it breaks the estimation pipeline only if the
    policy shifts rows from that cell.
    """
    report = ValidationReport()
    if sample.n < 2:
        report.errors.append(("TOO_SMALL", f"need at least 2 rows, got {sample.n}"))
    if not np.all(np.isfinite(sample.y)):
        report.errors.append(("NONFINITE_OUTCOME", "y contains non-finite values"))
    if sample.n_treated == 0:
        report.errors.append(("NO_TREATED", "no rows with d=1"))
    if sample.n_control == 0:
        report.errors.append(("NO_CONTROL", "no rows with d=0"))

    observed = sample.cells()
    if support is not None:
        declared = _normalize_support(support, sample.x.shape[1])
        unknown = [cell for cell in observed if cell not in declared]
        if unknown:
            report.errors.append(
                ("UNKNOWN_SUPPORT", f"covariate cells outside declared support: {unknown}")
            )
    if sample.n_treated:
        for cell in observed:
            mask = np.all(sample.x == np.asarray(cell, dtype=np.int64), axis=1) if cell else np.ones(sample.n, bool)
            if not (mask & (sample.d == 1)).any():
                report.warnings.append(
                    ("EMPTY_TREATED_CELL", f"cell {cell} has no treated rows")
                )
    return report


def require_valid(sample: Sample, support: Iterable | None = None) -> None:
    """Raise the first validation error; forward warnings to ``warnings``."""
    report = validate_sample(sample, support)
    for code, message in report.warnings:
        warnings.warn(f"{code}: {message}", UserWarning, stacklevel=2)
    if report.errors:
        code, message = report.errors[0]
        raise DataError(code, message)


def _check_delta(delta: float, p_hat: float) -> float:
    delta = float(delta)
    if not np.isfinite(delta) or not 0.0 < delta < 1.0 - p_hat:
        raise ConfigError(
            "DELTA_OUT_OF_RANGE",
            f"delta must lie strictly inside (0, 1 - p_hat) = (0, {1.0 - p_hat!r}), got {delta!r}",
        )
    return delta


def assign_randomized_policy(sample: Sample, delta: float, seed) -> PolicyAssignment:
    """Shift each control row independently with probability delta/(1-p_hat).

    One uniform draw per control row, in row order, from a stream derived
    deterministically from ``seed`` (an int or a sequence of ints).
    """
    delta = _check_delta(delta, sample.p_hat)
    prob = delta / (1.0 - sample.p_hat)
    controls = np.flatnonzero(sample.d == 0)
    if controls.size * prob < 1.0:
        warnings.warn(
            "expected number of newly treated rows is below 1; "
            "the policy may shift nothing at this sample size",
            UserWarning,
            stacklevel=2,
        )
    u = np.random.default_rng(seed).random(controls.size)
    d_delta = sample.d.copy()
    d_delta[controls[u < prob]] = 1
    return PolicyAssignment.from_d_delta(d_delta, delta)


def assign_threshold_policy(sample: Sample, delta: float, z: Sequence[float]) -> PolicyAssignment:
    """Shift the control rows whose z falls at or below the control-group
    delta/(1-p_hat) quantile (type-1 inverse); ties at the threshold are all
    shifted. Deterministic.
    """
    delta = _check_delta(delta, sample.p_hat)
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.size != sample.n:
        raise ValueError(f"z must have length {sample.n}, got {z.size}")
    rate = delta / (1.0 - sample.p_hat)
    z_controls = z[sample.d == 0]
    threshold = quantile(ecdf_from_values(z_controls, 1.0), rate)
    shifted = (sample.d == 0) & (z <= threshold)
    d_delta = sample.d | shifted.astype(np.int8)
    return PolicyAssignment.from_d_delta(d_delta, delta)
