"""Apparent distributions, sharp global-effect bounds, frontier, derived
bounds, and diagnostics. Exactness claims are asserted with ==, not approx."""
import numpy as np
import pytest

from conftest import random_policy_assignment, random_sample
from qbf.bounds import (
    Conclusion,
    Diagnostic,
    apparent_pair,
    default_tau_grid,
    derived_bounds,
    frontier_slope_diagnostics,
    global_bounds_curve,
    global_effect_bounds,
    qbf,
    sharpness_diagnostic,
)
from qbf.errors import ConfigError, DataError
from qbf.sample import PolicyAssignment, Sample, assign_threshold_policy
from qbf.stepcdf import ecdf_from_values, eval_cdf, mixture_cdf, quantile


def dyadic_fixture():
    """All weights and levels are dyadic rationals, so double arithmetic is
    exact and hand enumeration matches the machine bit for bit.

    y = 1..8, first four rows treated, threshold policy on y with
    delta = 0.25: the control quantile level is 0.25/0.5 = 0.5, the type-1
    0.5-quantile of controls (5, 6, 7, 8) is 6, so rows y = 5, 6 shift.
    """
    y = np.arange(1.0, 9.0)
    d = np.array([1, 1, 1, 1, 0, 0, 0, 0], np.int8)
    sample = Sample(y, d)
    assignment = assign_threshold_policy(sample, 0.25, y)
    assert assignment.d_delta.tolist() == [1, 1, 1, 1, 1, 1, 0, 0]
    return sample, assignment


class TestApparentPair:
    def test_dyadic_hand_values(self):
        # F_tilde = 0.5*ECDF{1,2,3,4} + 0.25*ECDF{7,8} and the newly-treated
        # proxy is ECDF{1,2,3,4} (single empty covariate cell), so
        # F_a = F_tilde + 0.25*ECDF{1,2,3,4}. Hand values:
        #   point:      1       2      3       4     7      8
        #   F_tilde:    0.125   0.25   0.375   0.5   0.625  0.75
        #   F_a:        0.1875  0.375  0.5625  0.75  0.875  1.0
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        assert pair.f_a_tilde.support.tolist() == [1, 2, 3, 4, 7, 8]
        assert pair.f_a_tilde.cum.tolist() == [0.125, 0.25, 0.375, 0.5, 0.625, 0.75]
        assert pair.f_a.cum.tolist() == [0.1875, 0.375, 0.5625, 0.75, 0.875, 1.0]
        assert pair.f_a_tilde.total_mass == 0.75
        assert pair.f_a.total_mass == 1.0

    def test_no_newly_treated(self):
        sample = Sample([1.0, 2.0, 3.0, 4.0], [1, 1, 0, 0])
        unchanged = PolicyAssignment.from_d_delta(sample.d, 0.25)
        with pytest.raises(DataError, match="NO_NEWLY_TREATED"):
            apparent_pair(sample, unchanged)

    def test_single_cell_collapse(self):
        # With one covariate value the proxy is the treated ECDF itself:
        # F_a = p*F1 + (1-p-delta)*F0d + delta*F1 pointwise.
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f1 = ecdf_from_values(sample.y[sample.d == 1])
        f0d = ecdf_from_values(sample.y[assignment.d_delta == 0])
        direct = mixture_cdf([(f1, 0.5), (f0d, 0.25), (f1, 0.25)])
        grid = np.linspace(0.0, 9.0, 50)
        assert np.max(np.abs(eval_cdf(pair.f_a, grid) - eval_cdf(direct, grid))) <= 1e-14

    def test_empty_cell_propagates(self):
        # The shifted control sits in a cell with no treated rows.
        sample = Sample([1.0, 2.0, 0.0, 5.0], [1, 1, 0, 0], [0, 0, 1, 0])
        assignment = assign_threshold_policy(sample, 0.25, sample.y)
        assert ((sample.d == 0) & (assignment.d_delta == 1)).any()
        with pytest.raises(DataError, match="EMPTY_CELL"):
            apparent_pair(sample, assignment)

    def test_matches_double_loop_oracle(self, rng):
        # Re-derive F_a at every support point from raw counts, mirroring the
        # defining weighted sum, without any step-function machinery.
        for trial in range(10):
            sample = random_sample(rng, n=60)
            delta, assignment = random_policy_assignment(sample, rng, trial)
            pair = apparent_pair(sample, assignment)
            y, d, dd = sample.y, sample.d, assignment.d_delta
            newly = [i for i in range(60) if d[i] == 0 and dd[i] == 1]
            cells = sorted({tuple(sample.x[i]) for i in newly})
            p_hat = float(np.mean(d))
            w0 = 1.0 - p_hat - delta
            for point in pair.f_a.support:
                n1 = sum(1 for i in range(60) if d[i] == 1)
                c1 = sum(1 for i in range(60) if d[i] == 1 and y[i] <= point) / n1
                n0d = sum(1 for i in range(60) if dd[i] == 0)
                c0 = sum(1 for i in range(60) if dd[i] == 0 and y[i] <= point) / n0d
                proxy = 0.0
                for cell in cells:
                    members = [i for i in range(60) if d[i] == 1 and tuple(sample.x[i]) == cell]
                    level = sum(1 for i in members if y[i] <= point) / len(members)
                    share = sum(1 for i in newly if tuple(sample.x[i]) == cell) / len(newly)
                    proxy += share * level
                direct = p_hat * c1 + w0 * c0 + delta * proxy
                assert abs(eval_cdf(pair.f_a, float(point)) - direct) <= 1e-14

    def test_envelope_invariant(self, rng):
        # f_a_tilde <= f_a <= f_a_tilde + delta pointwise, and the masses
        # account exactly.
        for trial in range(10):
            sample = random_sample(rng)
            delta, assignment = random_policy_assignment(sample, rng, trial)
            pair = apparent_pair(sample, assignment)
            grid = pair.f_a.support
            tilde = eval_cdf(pair.f_a_tilde, grid)
            full = eval_cdf(pair.f_a, grid)
            assert np.all(full - tilde >= -1e-12)
            assert np.all(full - tilde <= delta + 1e-12)
            assert abs(pair.f_a_tilde.total_mass - (1.0 - pair.p_hat - delta) - pair.p_hat) <= 1e-14
            assert abs(pair.f_a.total_mass - 1.0) <= 1e-12


class TestGlobalEffectBounds:
    def test_dyadic_hand_values(self):
        # tau = 0.5, F_y^{-1}(0.5) = 4.
        # c = 0: lower = max{Ft^{-1}(0.25)=2, Fa^{-1}(0.5)=3} = 3,
        #        upper = min{Ft^{-1}(0.5)=4,  Fa^{-1}(0.5)=3} = 3 -> (-1, -1).
        # c = 1: lower = max{2, Fa^{-1}(0.25)=2} = 2 -> -2,
        #        upper = min{4, Fa^{-1}(0.75)=4} = 4 -> 0.
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        assert global_effect_bounds(pair, f_y, 0.5, 0.0) == (-1.0, -1.0)
        assert global_effect_bounds(pair, f_y, 0.5, 1.0) == (-2.0, 0.0)

    def test_collapse_at_c_zero(self, rng):
        for trial in range(20):
            sample = random_sample(rng)
            delta, assignment = random_policy_assignment(sample, rng, trial)
            pair = apparent_pair(sample, assignment)
            f_y = ecdf_from_values(sample.y)
            for tau in (0.3, 0.5, 0.7):
                lower, upper = global_effect_bounds(pair, f_y, tau, 0.0)
                point = quantile(pair.f_a, tau) - quantile(f_y, tau)
                assert lower == upper == point

    def test_monotone_in_c(self, rng):
        c_grid = np.linspace(0.0, 1.0, 9)
        for trial in range(10):
            sample = random_sample(rng)
            delta, assignment = random_policy_assignment(sample, rng, trial)
            pair = apparent_pair(sample, assignment)
            f_y = ecdf_from_values(sample.y)
            for tau in (0.3, 0.5, 0.7):
                bounds = [global_effect_bounds(pair, f_y, tau, float(c)) for c in c_grid]
                lowers = [b[0] for b in bounds]
                uppers = [b[1] for b in bounds]
                assert all(a >= b for a, b in zip(lowers, lowers[1:]))
                assert all(a <= b for a, b in zip(uppers, uppers[1:]))
                assert all(lo <= hi for lo, hi in bounds)

    def test_envelope_quantile_ordering(self, rng):
        for trial in range(10):
            sample = random_sample(rng)
            delta, assignment = random_policy_assignment(sample, rng, trial)
            pair = apparent_pair(sample, assignment)
            for t in np.linspace(0.05, 1.0 - delta, 13):
                assert quantile(pair.f_a, float(t)) <= quantile(pair.f_a_tilde, float(t))

    def test_parameter_checks(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        with pytest.raises(ConfigError, match="TAU_OUT_OF_RANGE"):
            global_effect_bounds(pair, f_y, 0.25, 0.5)
        with pytest.raises(ConfigError, match="C_OUT_OF_RANGE"):
            global_effect_bounds(pair, f_y, 0.5, 1.5)

    def test_curve_matches_scalar_calls(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        taus = [0.3, 0.5, 0.7]
        curve = global_bounds_curve(pair, f_y, taus, 0.5)
        for i, tau in enumerate(taus):
            lo, hi = global_effect_bounds(pair, f_y, tau, 0.5)
            assert curve.lower[i] == lo and curve.upper[i] == hi


class TestQbf:
    def test_very_negative_g_clamps_to_one(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        curve = qbf(pair, f_y, [0.5], -1e6)
        # F_a evaluates to 0 far below the support, so c_raw = tau/delta.
        assert curve.c_values[0] == 0.5 / 0.25
        assert curve.clamped[0] == 1.0

    def test_g_at_exact_root_gives_zero(self):
        # tau = 0.5625 has observed quantile 5; g = -2 lands on support
        # point 3 where F_a = 0.5625 exactly, so c_raw = 0.
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        curve = qbf(pair, f_y, [0.5625], -2.0)
        assert curve.c_values[0] == 0.0

    def test_algebraic_identity(self, rng):
        for trial in range(10):
            sample = random_sample(rng)
            delta, assignment = random_policy_assignment(sample, rng, trial)
            pair = apparent_pair(sample, assignment)
            f_y = ecdf_from_values(sample.y)
            taus = default_tau_grid(delta)
            curve = qbf(pair, f_y, taus, 0.1)
            levels = eval_cdf(pair.f_a, quantile(f_y, taus) + 0.1)
            assert np.max(np.abs(delta * curve.c_values + levels - taus)) <= 1e-12

    def test_monotone_in_g(self, rng):
        g_grid = np.linspace(-0.5, 0.5, 11)
        for trial in range(8):
            sample = random_sample(rng)
            delta, assignment = random_policy_assignment(sample, rng, trial)
            pair = apparent_pair(sample, assignment)
            f_y = ecdf_from_values(sample.y)
            taus = default_tau_grid(delta, points=21)
            curves = [qbf(pair, f_y, taus, float(g)).c_values for g in g_grid]
            for earlier, later in zip(curves, curves[1:]):
                assert np.all(earlier >= later)

    def test_upper_side_negates_lower(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        taus = [0.3, 0.5, 0.7]
        lower = qbf(pair, f_y, taus, 0.1, "lower")
        upper = qbf(pair, f_y, taus, 0.1, "upper")
        assert np.array_equal(upper.c_values, -lower.c_values)
        assert upper.side is Conclusion.UPPER

    def test_per_tau_g_sequence(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        curve = qbf(pair, f_y, [0.4, 0.6], [0.0, 0.5])
        assert curve.c_values.shape == (2,)

    def test_tau_range_enforced(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        with pytest.raises(ConfigError, match="TAU_OUT_OF_RANGE"):
            qbf(pair, f_y, [0.2], 0.1)


class TestDerivedBounds:
    def test_negative_frontier_clamps_to_point_identification(self):
        # A huge g pushes F_a(q + g) to 1, so c_raw < 0, c_tilde = 0, and the
        # derived curve collapses to the point-identified effect.
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        taus = [0.4, 0.5, 0.6]
        curve = derived_bounds(pair, f_y, 0.5, 10.0, taus)
        assert curve.c == 0.0
        assert np.array_equal(curve.lower, curve.upper)
        reference = global_bounds_curve(pair, f_y, taus, 0.0)
        assert np.array_equal(curve.lower, reference.lower)

    def test_large_frontier_clamps_to_one(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        taus = [0.4, 0.5, 0.6]
        curve = derived_bounds(pair, f_y, 0.5, -10.0, taus)
        assert curve.c == 1.0
        reference = global_bounds_curve(pair, f_y, taus, 1.0)
        assert np.array_equal(curve.lower, reference.lower)
        assert np.array_equal(curve.upper, reference.upper)


def slack_fixture():
    """Ten rows engineered so the newly-treated proxy jumps to 1 far below
    the rest of the support: F_a = F_tilde + delta there, which makes the
    incomplete branch dominate the lower bound for every c in [0, 1].

    Treated: y = 10, 20, 30, 40 at cell 0 and y = 0.5 at cell 1.
    Controls: y = 5 at cell 1 (shifts; ranks lowest) and y = 50..80 at cell 0.
    """
    y = np.array([10.0, 20.0, 30.0, 40.0, 0.5, 5.0, 50.0, 60.0, 70.0, 80.0])
    d = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0, 0], np.int8)
    x = np.array([0, 0, 0, 0, 1, 1, 0, 0, 0, 0], np.int64)
    sample = Sample(y, d, x)
    assignment = assign_threshold_policy(sample, 0.1, y)
    assert ((sample.d == 0) & (assignment.d_delta == 1)).sum() == 1
    return sample, assignment


class TestSharpnessDiagnostic:
    def test_slack_fixture(self):
        sample, assignment = slack_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        for c in (0.0, 0.5, 1.0):
            assert sharpness_diagnostic(pair, f_y, 0.5, c) is Diagnostic.C_SLACK
        # direct check of the defining comparison at c = 1
        assert quantile(pair.f_a_tilde, 0.5 - 0.1) >= quantile(pair.f_a, 0.5 - 0.1 * 1.0)

    def test_binding_on_plain_fixture(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        assert sharpness_diagnostic(pair, f_y, 0.5, 0.0) is Diagnostic.C_BINDING


class TestFrontierSlopes:
    def test_slopes_nonpositive(self, rng):
        for trial in range(6):
            sample = random_sample(rng, n=60)
            delta, assignment = random_policy_assignment(sample, rng, trial)
            pair = apparent_pair(sample, assignment)
            f_y = ecdf_from_values(sample.y)
            frontier = qbf(pair, f_y, default_tau_grid(delta, points=21), 0.1)
            slopes = frontier_slope_diagnostics(frontier, pair, f_y, 0.01)
            assert np.all(slopes <= 0.0)

    def test_flat_plateau_gives_zero(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        # dg so small that no jump of F_a falls in (q + g, q + g + dg]
        frontier = qbf(pair, f_y, [0.5], 0.1)
        slopes = frontier_slope_diagnostics(frontier, pair, f_y, 1e-9)
        assert slopes[0] == 0.0

    def test_jump_slope_value(self):
        # Spanning exactly the jump at support point 3 (mass 0.1875) with
        # delta = 0.25: slope = -(jump mass) / (delta * dg).
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        # q_Y(0.5) = 4; g = -1.5 sits between support points 2 and 3
        frontier = qbf(pair, f_y, [0.5], -1.5)
        dg = 1.0  # 4 - 1.5 + 1 = 3.5 crosses the jump at 3
        slopes = frontier_slope_diagnostics(frontier, pair, f_y, dg)
        jump = eval_cdf(pair.f_a, 3.5) - eval_cdf(pair.f_a, 2.5)
        assert slopes[0] == pytest.approx(-jump / (0.25 * dg), abs=1e-15)

    def test_dg_must_be_positive(self):
        sample, assignment = dyadic_fixture()
        pair = apparent_pair(sample, assignment)
        f_y = ecdf_from_values(sample.y)
        frontier = qbf(pair, f_y, [0.5], 0.1)
        with pytest.raises(ValueError):
            frontier_slope_diagnostics(frontier, pair, f_y, 0.0)


class TestDefaultTauGrid:
    def test_respects_delta(self):
        grid = default_tau_grid(0.1)
        assert grid.size == 71
        assert grid[0] == pytest.approx(0.15)
        assert grid[-1] == pytest.approx(0.85)
        wide = default_tau_grid(0.3)
        assert wide[0] == pytest.approx(0.31)
        assert wide[-1] == pytest.approx(0.69)

    def test_empty_grid_raises(self):
        with pytest.raises(ConfigError, match="TAU_GRID_EMPTY"):
            default_tau_grid(0.49)
