import numpy as np
import pytest

from src.ambrosetti_prodi.census import Census, colinearity_fit, comparable, count_solutions, random_smooth_field
from src.ambrosetti_prodi.context import prepare_problem
from src.config import SolverSettings
from src.discretization.field import Field
from src.discretization.scheme import discretize
from src.errors import InvariantViolation, PreconditionError
from src.operators.controlled import plateau_operator
from src.spectral.eigen import principal_half_eigen


@pytest.fixture(scope="module")
def plateau_ctx(laplace_d, grid100):
    slope = principal_half_eigen(laplace_d, "+").value
    d = discretize(plateau_operator(0.5, 1.5, slope, 1.0), grid100)
    return prepare_problem(d, Field.zeros(grid100), SolverSettings(census_tol=1e-9))


class TestHelpers:
    def test_colinearity_fit(self, sine):
        ks, deviation = colinearity_fit([0.0 * sine, 0.25 * sine, 0.5 * sine, sine])
        assert ks == pytest.approx((0.25, 0.5))
        assert deviation == pytest.approx(0.0, abs=1e-14)

    def test_colinearity_deviation(self, sine, grid100):
        bump = Field.from_function(grid100, lambda x: np.sin(2 * x))
        _, deviation = colinearity_fit([0.0 * sine, 0.5 * sine + 0.1 * bump, sine])
        assert deviation > 0.05

    def test_comparable(self, sine, grid100):
        bump = Field.from_function(grid100, lambda x: np.sin(2 * x))
        assert comparable(sine, 2.0 * sine)
        assert not comparable(sine, bump)

    def test_random_field(self, grid100):
        a = random_smooth_field(grid100, np.random.default_rng(7), 3.0)
        b = random_smooth_field(grid100, np.random.default_rng(7), 3.0)
        assert a.sup_norm() == pytest.approx(3.0)
        np.testing.assert_array_equal(a.values, b.values)

    def test_separation_invariant(self, sine):
        with pytest.raises(InvariantViolation):
            Census(t=0.0, solutions=(sine, sine + 1e-6), ordered=True, colinear_segment=False,
                   cluster_radius=1e-4)

    def test_order_invariant(self, sine, grid100):
        bump = Field.from_function(grid100, lambda x: np.sin(2 * x))
        with pytest.raises(InvariantViolation):
            Census(t=0.0, solutions=(sine, bump), ordered=True, colinear_segment=False,
                   cluster_radius=1e-4)


@pytest.mark.slow
class TestCountSolutions:
    def test_two_solutions_above_threshold(self, fucik_ctx):
        census = count_solutions(fucik_ctx, 1.0)
        assert census.count == 2
        assert census.ordered and not census.colinear_segment
        lower, upper = census.solutions
        assert lower.distance(fucik_ctx.w_lower) < 1e-6
        assert upper.distance(fucik_ctx.w_star) < 1e-5
        assert census.converged <= census.starts

    def test_none_below_threshold(self, fucik_ctx):
        census = count_solutions(fucik_ctx, -0.5)
        assert census.count == 0
        assert census.ordered
        assert census.merge_distance == float("inf")

    def test_resolution_flag(self, fucik_ctx):
        assert count_solutions(fucik_ctx, 0.005, t_star=0.0).resolution_limited

    def test_seed_is_reproducible(self, fucik_ctx):
        a = count_solutions(fucik_ctx, 1.0, seed=5)
        b = count_solutions(fucik_ctx, 1.0, seed=5)
        assert a.to_summary() == b.to_summary()

    def test_plateau_segment(self, plateau_ctx):
        census = count_solutions(plateau_ctx, 0.0, seed=3)
        assert census.count >= 3
        assert census.ordered
        assert census.colinear_segment
        assert all(0.0 < k < 1.0 for k in census.segment_coefficients)

    def test_needs_enough_starts(self, fucik_ctx):
        with pytest.raises(PreconditionError):
            count_solutions(fucik_ctx, 1.0, n_starts=4)
