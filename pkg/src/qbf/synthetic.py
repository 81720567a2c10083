"""Synthetic data generator, independent brute-force oracle, and Monte Carlo
coverage harness.

The generator follows a latent-index selection model: treatment is taken by
the rows with a nonnegative latent taste V, and the outcome disturbances
correlate with V through ``rho_sel``, which induces selection on unobservables
without any instrument. Population quantities are obtained by running the
very same estimators on huge simulated samples, with Monte Carlo standard
errors from independent half-size replicates.

``BruteForceEvaluator`` re-derives the sharp bounds from scratch with plain
Python counting loops and linear-scan inverses. It deliberately shares no
code with the step-function machinery; agreement with the main path is the
central oracle-equivalence property of the test suite.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .bootstrap import BootstrapConfig, assign_policy, bootstrap_frontier
from .bounds import apparent_pair, derived_bounds, global_effect_bounds, qbf
from .errors import ConfigError, DataError
from .sample import PolicyAssignment, PolicySpec, Sample
from .stepcdf import ecdf_from_values, eval_cdf, quantile

BRUTE_FORCE_MAX_N = 200


@dataclass(frozen=True)
class DgpSpec:
    """Latent-index selection model with an additive treatment effect.

    ``x_probs`` are the cell probabilities of a categorical covariate with
    codes 0..k-1, drawn independently of the latent taste; ``x_shift`` is its
    additive effect on the outcome.
    """

    n: int
    rho_sel: float = 0.5
    effect: float = 0.4
    x_probs: tuple[float, ...] = (0.5, 0.5)
    x_shift: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 10:
            raise ConfigError("N_TOO_SMALL", f"need n >= 10, got {self.n}")
        if not -1.0 < self.rho_sel < 1.0:
            raise ConfigError(
                "RHO_OUT_OF_RANGE", f"rho_sel must lie in (-1, 1), got {self.rho_sel!r}"
            )
        probs = tuple(float(p) for p in self.x_probs)
        if not probs or min(probs) < 0.0 or abs(sum(probs) - 1.0) > 1e-12:
            raise ConfigError("X_PROBS_INVALID", f"x_probs must be a pmf, got {self.x_probs!r}")
        object.__setattr__(self, "x_probs", probs)


def generate_dgp(spec: DgpSpec) -> Sample:
    """Draw one sample; deterministic and bitwise reproducible per seed.

    V is standard normal and treatment is 1{V >= 0}, so the population
    treated share is one half. The arm-d disturbance is
    rho_sel * V + sqrt(1 - rho_sel^2) * eps_d with independent standard
    normal eps_d.
    """
    rng = np.random.default_rng(spec.seed)
    n = int(spec.n)
    v = rng.standard_normal(n)
    eps0 = rng.standard_normal(n)
    eps1 = rng.standard_normal(n)
    x = rng.choice(len(spec.x_probs), size=n, p=spec.x_probs)
    d = (v >= 0.0).astype(np.int8)
    mix = math.sqrt(1.0 - spec.rho_sel**2)
    u0 = spec.rho_sel * v + mix * eps0
    u1 = spec.rho_sel * v + mix * eps1
    y0 = spec.x_shift * x + u0
    y1 = spec.x_shift * x + spec.effect + u1
    y = np.where(d == 1, y1, y0)
    return Sample(y, d, x.reshape(-1, 1))


def derive_seed(*parts: int) -> int:
    """Stable child seed from integer parts (for nested deterministic streams)."""
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])


def oracle_statistic(
    spec: DgpSpec,
    policy: PolicySpec,
    stat_fn: Callable[[Sample, PolicyAssignment], np.ndarray],
    oracle_n: int = 10**6,
    seed: int = 0,
    n_half: int = 10,
) -> tuple[np.ndarray, np.ndarray]:
    """Population value of a pipeline statistic by large-sample plug-in.

    Runs ``stat_fn`` on one sample of size ``oracle_n`` and on ``n_half``
    independent half-size samples; the Monte Carlo standard error is the
    half-sample standard deviation divided by sqrt(2).
    """

    def run(n_run: int, run_seed: int) -> np.ndarray:
        sam = generate_dgp(replace(spec, n=n_run, seed=run_seed))
        assignment = assign_policy(sam, policy, seed=derive_seed(run_seed, 1))
        return np.asarray(stat_fn(sam, assignment), dtype=np.float64)

    value = run(int(oracle_n), derive_seed(seed, 0))
    halves = np.stack(
        [run(int(oracle_n) // 2, derive_seed(seed, j)) for j in range(1, n_half + 1)]
    )
    mc_se = halves.std(axis=0, ddof=1) / math.sqrt(2.0)
    return value, mc_se


@dataclass(frozen=True)
class OracleQuantity:
    value: float
    mc_se: float


@dataclass(frozen=True)
class OracleRecord:
    tau: float
    g: float
    c: float
    frontier: OracleQuantity
    lower: OracleQuantity
    upper: OracleQuantity
    f_a_level: OracleQuantity


@dataclass(frozen=True)
class OracleReport:
    oracle_n: int
    records: list[OracleRecord]


def oracle_population_quantities(
    spec: DgpSpec,
    policy: PolicySpec,
    queries: Sequence[tuple[float, float, float]],
    oracle_n: int = 10**6,
    seed: int = 0,
) -> OracleReport:
    """Population frontier, bounds, and apparent-CDF level per (tau, g, c)."""
    if int(oracle_n) < 10**5:
        raise ConfigError("ORACLE_TOO_SMALL", f"oracle_n must be >= 1e5, got {oracle_n}")
    queries = [(float(t), float(g), float(c)) for t, g, c in queries]

    def stat(sample: Sample, assignment: PolicyAssignment) -> np.ndarray:
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y, 1.0)
        out = []
        for tau, g, c in queries:
            frontier = qbf(pair, f_y, np.asarray([tau]), g).c_values[0]
            lower, upper = global_effect_bounds(pair, f_y, tau, c)
            level = eval_cdf(pair.f_a, quantile(f_y, tau) + g)
            out.extend([frontier, lower, upper, level])
        return np.asarray(out)

    values, ses = oracle_statistic(spec, policy, stat, oracle_n, seed)
    records = []
    for i, (tau, g, c) in enumerate(queries):
        base = 4 * i
        records.append(
            OracleRecord(
                tau=tau,
                g=g,
                c=c,
                frontier=OracleQuantity(values[base], ses[base]),
                lower=OracleQuantity(values[base + 1], ses[base + 1]),
                upper=OracleQuantity(values[base + 2], ses[base + 2]),
                f_a_level=OracleQuantity(values[base + 3], ses[base + 3]),
            )
        )
    return OracleReport(oracle_n=int(oracle_n), records=records)


def _count_le(sorted_values: list[float], point: float) -> int:
    count = 0
    for value in sorted_values:
        if value <= point:
            count += 1
        else:
            break
    return count


class BruteForceEvaluator:
    """From-scratch sharp bounds for one (sample, assignment), n <= 200.

    Evaluates every distribution by counting loops over plain Python lists
    and inverts by linear scans; precomputation happens once so a grid of
    (tau, c) queries stays cheap.
    """

    def __init__(self, sample: Sample, assignment: PolicyAssignment):
        if sample.n > BRUTE_FORCE_MAX_N:
            raise ValueError(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}")
        y = [float(v) for v in sample.y]
        d = [int(v) for v in sample.d]
        dd = [int(v) for v in assignment.d_delta]
        n = len(y)
        self.n = n
        self.p_hat = sum(d) / n
        self.delta = float(assignment.delta)

        treated = sorted(y[i] for i in range(n) if d[i] == 1)
        pol_controls = sorted(y[i] for i in range(n) if dd[i] == 0)
        newly = [i for i in range(n) if d[i] == 0 and dd[i] == 1]
        if not newly:
            raise DataError("NO_NEWLY_TREATED", "the assignment shifts no rows")
        if not treated or not pol_controls:
            raise DataError("EMPTY_CELL", "an arm of the decomposition is empty")

        cells = sorted({tuple(int(v) for v in sample.x[i]) for i in newly})
        cell_weight = {}
        cell_treated = {}
        for cell in cells:
            cell_weight[cell] = sum(
                1 for i in newly if tuple(int(v) for v in sample.x[i]) == cell
            ) / len(newly)
            members = sorted(
                y[i]
                for i in range(n)
                if d[i] == 1 and tuple(int(v) for v in sample.x[i]) == cell
            )
            if not members:
                raise DataError("EMPTY_CELL", f"no treated rows at cell {cell}")
            cell_treated[cell] = members

        support = sorted(set(treated) | set(pol_controls))
        w0 = 1.0 - self.p_hat - self.delta
        tilde_vals = []
        apparent_vals = []
        for point in support:
            level_treated = _count_le(treated, point) / len(treated)
            level_controls = _count_le(pol_controls, point) / len(pol_controls)
            tilde = self.p_hat * level_treated + w0 * level_controls
            proxy = 0.0
            for cell in cells:
                proxy = proxy + cell_weight[cell] * (
                    _count_le(cell_treated[cell], point) / len(cell_treated[cell])
                )
            tilde_vals.append(tilde)
            apparent_vals.append(tilde + self.delta * proxy)
        self._support = support
        self._tilde = tilde_vals
        self._apparent = apparent_vals
        self._y_sorted = sorted(y)

    def _inverse(self, values: list[float], t: float) -> float:
        if t <= 0.0:
            return float("-inf")
        if t > values[-1]:
            return float("inf")
        for point, value in zip(self._support, values):
            if value >= t:
                return point
        return self._support[-1]

    def _y_quantile(self, t: float) -> float:
        for j, point in enumerate(self._y_sorted):
            if (j + 1) / self.n >= t:
                return point
        return self._y_sorted[-1]

    def bounds(self, tau: float, c: float) -> tuple[float, float]:
        if not self.delta < tau < 1.0 - self.delta:
            raise ConfigError("TAU_OUT_OF_RANGE", f"tau {tau!r} outside (delta, 1 - delta)")
        if not 0.0 <= c <= 1.0:
            raise ConfigError("C_OUT_OF_RANGE", f"c {c!r} outside [0, 1]")
        q_y = self._y_quantile(tau)
        lower = max(
            self._inverse(self._tilde, tau - self.delta),
            self._inverse(self._apparent, tau - self.delta * c),
        )
        upper = min(
            self._inverse(self._tilde, tau),
            self._inverse(self._apparent, tau + self.delta * c),
        )
        return lower - q_y, upper - q_y


def brute_force_bounds(
    sample: Sample, assignment: PolicyAssignment, tau: float, c: float
) -> tuple[float, float]:
    """One-shot brute-force bounds; see :class:`BruteForceEvaluator`."""
    return BruteForceEvaluator(sample, assignment).bounds(tau, c)


@dataclass(frozen=True)
class CoverageRow:
    tau: float
    coverage: float
    mc_se: float
    median_width: float


@dataclass(frozen=True)
class CoverageTable:
    rows: list[CoverageRow]
    n_data: int
    replications: int
    mc_reps: int
    level: float


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, then QBF_THREADS, then cpu count."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("QBF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _coverage_replicate(args) -> tuple[np.ndarray, np.ndarray]:
    spec, policy, g, taus, n_data, reps, level, seed, m, oracle_values = args
    data = generate_dgp(replace(spec, n=n_data, seed=derive_seed(seed, 201, m)))
    cfg = BootstrapConfig(replications=reps, level=level, seed=derive_seed(seed, 301, m))
    band = bootstrap_frontier(data, policy, g, "lower", taus, cfg)
    covered = (band.lo <= oracle_values) & (oracle_values <= band.hi)
    return covered, band.hi - band.lo


def coverage_study(
    spec: DgpSpec,
    policy: PolicySpec,
    g: float,
    taus,
    n_data: int,
    replications: int,
    mc_reps: int,
    seed: int = 0,
    level: float = 0.95,
    oracle_n: int = 10**6,
    workers: int | None = None,
) -> CoverageTable:
    """Fraction of Monte Carlo datasets whose band covers the oracle frontier.

    Per tau the table reports the coverage, its Monte Carlo standard error
    sqrt(cov * (1 - cov) / M), and the median band width. Replications run in
    parallel (capped by QBF_THREADS) and merge deterministically by index.
    """
    taus = np.asarray(taus, dtype=np.float64).ravel()

    def frontier_stat(sample: Sample, assignment: PolicyAssignment) -> np.ndarray:
        pair = apparent_pair(sample, assignment)
        return qbf(pair, ecdf_from_values(sample.y, 1.0), taus, g).c_values

    oracle_values, _ = oracle_statistic(
        spec, policy, frontier_stat, oracle_n, derive_seed(seed, 101)
    )
    tasks = [
        (spec, policy, g, taus, int(n_data), int(replications), level, seed, m, oracle_values)
        for m in range(int(mc_reps))
    ]
    n_workers = resolve_workers(workers)
    if n_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_coverage_replicate, tasks, chunksize=4))
    else:
        results = [_coverage_replicate(task) for task in tasks]
    covered = np.stack([r[0] for r in results])
    widths = np.stack([r[1] for r in results])
    rows = []
    m_total = covered.shape[0]
    for i, tau in enumerate(taus):
        cov = float(covered[:, i].mean())
        rows.append(
            CoverageRow(
                tau=float(tau),
                coverage=cov,
                mc_se=math.sqrt(cov * (1.0 - cov) / m_total),
                median_width=float(np.median(widths[:, i])),
            )
        )
    return CoverageTable(
        rows=rows,
        n_data=int(n_data),
        replications=int(replications),
        mc_reps=int(mc_reps),
        level=float(level),
    )


def oracle_derived_lower_at_tau_star(
    spec: DgpSpec,
    policy: PolicySpec,
    tau_star: float,
    g: float,
    oracle_n: int = 10**6,
    seed: int = 0,
) -> tuple[float, float]:
    """Population derived-bounds lower end at tau_star, with its mc_se.

    By construction of the frontier, this equals g in the population whenever
    the budget binds there and the frontier value lies inside [0, 1].
    """

    def stat(sample: Sample, assignment: PolicyAssignment) -> np.ndarray:
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y, 1.0)
        curve = derived_bounds(pair, f_y, tau_star, g, np.asarray([tau_star]))
        return np.asarray([curve.lower[0]])

    value, mc_se = oracle_statistic(spec, policy, stat, oracle_n, seed)
    return float(value[0]), float(mc_se[0])
