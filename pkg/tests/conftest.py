"""Shared helpers for building random admissible samples and policies."""
import warnings

import numpy as np
import pytest

from qbf.sample import Sample, assign_randomized_policy, assign_threshold_policy


def random_sample(rng, n=None, k_cells=2) -> Sample:
    """Random sample with both arms and treated rows in every covariate cell."""
    if n is None:
        n = int(rng.integers(12, 61))
    y = rng.normal(size=n)
    d = np.zeros(n, np.int8)
    x = np.zeros(n, np.int64)
    # seed every cell with one treated and one control row, then fill randomly
    head = 0
    for cell in range(k_cells):
        d[head], x[head] = 1, cell
        d[head + 1], x[head + 1] = 0, cell
        head += 2
    d[head:] = rng.integers(0, 2, n - head)
    x[head:] = rng.integers(0, k_cells, n - head)
    return Sample(y, d, x)


def random_policy_assignment(sample, rng, trial, delta=None):
    """Alternate threshold and randomized policies across trials.

    A randomized draw can shift zero rows at small n; retry with fresh seeds
    (deterministically) until the assignment is usable.
    """
    if delta is None:
        hi = min(0.15, 1.0 - sample.p_hat - 0.02)
        delta = float(rng.uniform(0.03, hi))
    if trial % 2 == 0:
        return delta, assign_threshold_policy(sample, delta, sample.y)
    for attempt in range(50):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            assignment = assign_randomized_policy(
                sample, delta, seed=(1000 + trial, attempt)
            )
        if (assignment.d_delta > sample.d).any():
            return delta, assignment
    raise AssertionError("randomized policy never shifted a row in 50 attempts")


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
