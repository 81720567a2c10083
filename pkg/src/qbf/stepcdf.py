"""Weighted step-function distributions: ECDFs, mixtures, generalized inverses.

Every distribution here is a right-continuous step function with total mass
in (0, 1]; sub-distributions (mass < 1) are first-class citizens. Quantiles
use the type-1 generalized inverse ``inf{y : F(y) >= t}`` extended with
sentinels: ``-inf`` for t <= 0 and ``+inf`` for t above the total mass. At
t equal to the total mass the maximal support point is returned, because an
empirical step function attains its supremum.

Mixture cumulative values are direct per-point weighted sums evaluated in a
fixed left-to-right order, which keeps mass identities at the 1e-14 level and
makes the arithmetic reproducible against independent reimplementations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import DataError

if TYPE_CHECKING:  # pragma: no cover
    from .sample import PolicyAssignment, Sample

NEG_INF = float("-inf")
POS_INF = float("inf")

#: Row predicates understood by :func:`conditional_ecdf`.
PREDICATES = ("D=1", "D=0", "D_delta=0", "D=1,X=x")


def _readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StepCdf:
    """Right-continuous step function with total mass in (0, 1].

    Attributes
    ----------
    support : strictly increasing 1-D float array of jump locations
    cum : nondecreasing cumulative values at the jump locations; the last
        entry is the total mass
    """

    support: np.ndarray
    cum: np.ndarray

    def __post_init__(self):
        support = _readonly(self.support, np.float64)
        cum = _readonly(self.cum, np.float64)
        if support.ndim != 1 or support.size == 0 or support.shape != cum.shape:
            raise DataError(
                "EMPTY_INPUT",
                "support and cum must be nonempty 1-D arrays of equal length",
            )
        if not np.all(np.isfinite(support)):
            raise ValueError("support points must be finite")
        if support.size > 1 and np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if cum[0] < 0.0 or np.any(np.diff(cum) < 0):
            raise ValueError("cum must be nonnegative and nondecreasing")
        if not 0.0 < cum[-1] <= 1.0 + 1e-12:
            raise ValueError(f"total mass must lie in (0, 1], got {float(cum[-1])!r}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cum", cum)

    @property
    def total_mass(self) -> float:
        return float(self.cum[-1])


@dataclass(frozen=True)
class StepPmf:
    """Probability mass function over covariate cells (tuples of codes)."""

    atoms: Mapping[tuple, float]

    def __post_init__(self):
        atoms = dict(sorted(self.atoms.items()))
        if not atoms:
            raise DataError("EMPTY_INPUT", "a pmf needs at least one atom")
        total = 0.0
        for cell, prob in atoms.items():
            if prob < 0.0:
                raise ValueError(f"negative probability {prob!r} at cell {cell!r}")
            total += prob
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", atoms)

    def cells(self) -> list[tuple]:
        return list(self.atoms.keys())


def ecdf_from_values(values, weight: float = 1.0) -> StepCdf:
    """Empirical CDF of ``values`` scaled to total mass ``weight``.

    Duplicate values are merged into a single support point with summed mass,
    so the inverse is unambiguous.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size == 0:
        raise DataError("EMPTY_INPUT", "cannot build an ECDF from zero values")
    if not np.all(np.isfinite(vals)):
        raise ValueError("ECDF values must be finite")
    if not 0.0 < weight <= 1.0:
        raise ValueError(f"weight must lie in (0, 1], got {weight!r}")
    support, counts = np.unique(vals, return_counts=True)
    cum = weight * (np.cumsum(counts) / vals.size)
    return StepCdf(support, cum)


def eval_cdf(f: StepCdf, y):
    """Mass at or below ``y``: 0 below the support, total mass above it.

    Accepts a scalar or an array; the return type matches.
    """
    idx = np.searchsorted(f.support, y, side="right")
    if np.ndim(y) == 0:
        return float(f.cum[idx - 1]) if idx > 0 else 0.0
    return np.where(idx > 0, f.cum[np.maximum(idx - 1, 0)], 0.0)


def quantile(f: StepCdf, t):
    """Type-1 generalized inverse with extended-real sentinels.

    Returns ``-inf`` for t <= 0, ``+inf`` for t above the total mass, and
    otherwise the smallest support point y with ``eval_cdf(f, y) >= t``.
    Accepts a scalar or an array.
    """
    if np.ndim(t) == 0:
        t = float(t)
        if t <= 0.0:
            return NEG_INF
        if t > f.total_mass:
            return POS_INF
        return float(f.support[np.searchsorted(f.cum, t, side="left")])
    t = np.asarray(t, dtype=np.float64)
    idx = np.minimum(np.searchsorted(f.cum, t, side="left"), f.support.size - 1)
    out = f.support[idx]
    out = np.where(t > f.total_mass, POS_INF, out)
    return np.where(t <= 0.0, NEG_INF, out)


def _predicate_mask(sample: "Sample", predicate: str, assignment, x) -> np.ndarray:
    if predicate == "D=1":
        return sample.d == 1
    if predicate == "D=0":
        return sample.d == 0
    if predicate == "D_delta=0":
        if assignment is None:
            raise ValueError("predicate 'D_delta=0' needs a policy assignment")
        return assignment.d_delta == 0
    if predicate == "D=1,X=x":
        if x is None:
            raise ValueError("predicate 'D=1,X=x' needs a covariate cell x")
        cell = np.asarray(x, dtype=np.int64).ravel()
        if cell.size != sample.x.shape[1]:
            raise ValueError(
                f"cell {tuple(cell)!r} has {cell.size} components, "
                f"sample covariates have {sample.x.shape[1]}"
            )
        mask = sample.d == 1
        if cell.size:
            mask = mask & np.all(sample.x == cell, axis=1)
        return mask
    raise ValueError(f"unknown predicate {predicate!r}; expected one of {PREDICATES}")


def conditional_ecdf(
    sample: "Sample",
    predicate: str,
    assignment: "PolicyAssignment | None" = None,
    x=None,
) -> StepCdf:
    """Unit-mass ECDF of the outcome over the rows selected by ``predicate``.

    Raises ``EMPTY_CELL`` when no row satisfies the predicate, which signals
    an in-sample failure of the covariate support condition for the
    ``"D=1,X=x"`` case.
    """
    mask = _predicate_mask(sample, predicate, assignment, x)
    if not mask.any():
        detail = f" at cell {tuple(np.asarray(x).ravel())}" if predicate == "D=1,X=x" else ""
        raise DataError("EMPTY_CELL", f"no rows satisfy {predicate}{detail}")
    return ecdf_from_values(sample.y[mask], 1.0)


def mixture_cdf(parts: Sequence[tuple[StepCdf, float]]) -> StepCdf:
    """Pointwise weighted sum of step functions on their merged support.

    The total mass is the weighted sum of the part masses; weights must be
    nonnegative. Terms accumulate left to right in the order given.
    """
    if not parts:
        raise DataError("EMPTY_INPUT", "mixture needs at least one part")
    for _, w in parts:
        if w < 0.0 or not np.isfinite(w):
            raise ValueError(f"mixture weights must be finite and >= 0, got {w!r}")
    support = np.unique(np.concatenate([p.support for p, _ in parts]))
    acc = None
    for part, w in parts:
        idx = np.searchsorted(part.support, support, side="right")
        vals = np.where(idx > 0, part.cum[np.maximum(idx - 1, 0)], 0.0)
        term = w * vals
        acc = term if acc is None else acc + term
    return StepCdf(support, acc)


def pmf_from_rows(sample: "Sample", mask) -> StepPmf:
    """Empirical frequencies of covariate cells within a row mask."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (sample.n,):
        raise ValueError(f"mask must have shape ({sample.n},), got {mask.shape}")
    if not mask.any():
        raise DataError("EMPTY_CELL", "mask selects no rows")
    rows = sample.x[mask]
    cells, counts = np.unique(rows, axis=0, return_counts=True)
    total = int(mask.sum())
    atoms = {
        tuple(int(v) for v in cell): int(count) / total
        for cell, count in zip(cells, counts)
    }
    return StepPmf(atoms)
