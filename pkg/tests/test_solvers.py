import numpy as np
import pytest

from src.discretization.field import Field
from src.discretization.scheme import apply_Fh
from src.errors import InvariantViolation, PreconditionError, SupersolutionError
from src.solvers.constructions import build_subsolution, build_supersolution, pucci_constant, pucci_scheme
from src.solvers.convexity import convex_combination_check
from src.solvers.howard import residual_norm, solve_proper
from src.solvers.newton import semismooth_newton
from src.solvers.perron import perron_iterate
from src.solvers.report import OrderedPair, SolveReport, SolveStatus

TOL = 1e-8


def parabola(grid):
    """Exact discrete solution of u'' = -1 with zero boundary values."""
    return Field.from_function(grid, lambda x: x * (np.pi - x) / 2.0)


class TestSolveProper:
    def test_poisson(self, laplace_d, grid100):
        report = solve_proper(laplace_d, Field.constant(grid100, -1.0), shift=0.0)
        assert report.converged and report.iterations == 1
        assert report.solution.distance(parabola(grid100)) < 1e-8

    def test_fucik_with_shift(self, fucik_d, sine):
        report = solve_proper(fucik_d, sine)
        assert report.converged
        assert residual_norm(fucik_d, report.solution, sine + (fucik_d.delta + 1.0) * report.solution) < 1e-7

    def test_shift_must_exceed_delta(self, fucik_d, sine):
        with pytest.raises(PreconditionError):
            solve_proper(fucik_d, sine, shift=1.0)

    def test_grid_mismatch(self, fucik_d, grid200):
        with pytest.raises(PreconditionError):
            solve_proper(fucik_d, Field.zeros(grid200))


class TestPerronIterate:
    def test_increasing_to_minimal_solution(self, laplace_d, grid100):
        report = perron_iterate(laplace_d, Field.constant(grid100, -1.0), Field.zeros(grid100), tol=TOL)
        assert report.converged
        assert all(b >= a - 1e-12 for a, b in zip(report.history, report.history[1:]))
        assert report.solution.distance(parabola(grid100)) < 1e-6

    def test_from_above(self, laplace_d, grid100):
        start = 2.0 * parabola(grid100)
        report = perron_iterate(laplace_d, Field.constant(grid100, -1.0), start, tol=TOL, from_above=True)
        assert report.converged
        assert report.solution.distance(parabola(grid100)) < 1e-6

    def test_rejects_non_subsolution(self, laplace_d, grid100):
        with pytest.raises(PreconditionError):
            perron_iterate(laplace_d, Field.constant(grid100, -1.0), Field.constant(grid100, 1.0))

    def test_cap(self, laplace_d, grid100):
        report = perron_iterate(laplace_d, Field.constant(grid100, -1.0), Field.zeros(grid100), cap=2, tol=TOL)
        assert report.status is SolveStatus.ITERATION_CAP and report.iterations == 2

    def test_policy_iteration_cap_is_forwarded(self, monkeypatch, laplace_d, grid100):
        caps = []

        def recording_solve(*args, **kwargs):
            caps.append(kwargs["cap"])
            return solve_proper(*args, **kwargs)

        monkeypatch.setattr("src.solvers.perron.solve_proper", recording_solve)
        perron_iterate(laplace_d, Field.constant(grid100, -1.0), Field.zeros(grid100), cap=3, tol=TOL,
                       howard_cap=7)
        assert caps and set(caps) == {7}


class TestSemismoothNewton:
    def test_upper_solution_is_t_times_w_star(self, fucik_ctx):
        t = 1.0
        report = semismooth_newton(fucik_ctx.d, fucik_ctx.rhs(t), 1.5 * t * fucik_ctx.w_star, tol=TOL)
        assert report.converged
        assert report.solution.distance(t * fucik_ctx.w_star) < 1e-5

    def test_start_already_solution(self, laplace_d, grid100):
        report = semismooth_newton(laplace_d, Field.constant(grid100, -1.0), parabola(grid100), tol=TOL)
        assert report.converged and report.iterations == 0

    def test_damping_range(self, laplace_d, grid100):
        with pytest.raises(PreconditionError):
            semismooth_newton(laplace_d, Field.zeros(grid100), Field.zeros(grid100), damping=0.0)


class TestConstructions:
    def test_subsolution(self, fucik_ctx):
        ctx, margin = fucik_ctx, 0.1
        sub = build_subsolution(ctx.d, ctx.h, ctx.phi, (-1.0, 2.0), margin=margin, bound=5.0, tol=TOL)
        assert sub.max() < 0.0
        for t in (-1.0, 0.5, 2.0):
            assert (apply_Fh(ctx.d, sub) - ctx.rhs(t)).min() >= margin - 1e-6

    def test_subsolution_margin(self, fucik_ctx):
        with pytest.raises(PreconditionError):
            build_subsolution(fucik_ctx.d, fucik_ctx.h, fucik_ctx.phi, (0.0,), margin=0.0, bound=1.0)

    def test_supersolution_for_zero_h(self, fucik_ctx):
        vbar = build_supersolution(fucik_ctx.d, fucik_ctx.h, fucik_ctx.phi, 0.5)
        assert vbar.sup_norm() == 0.0

    def test_supersolution_failure_reports_threshold(self, fucik_ctx):
        with pytest.raises(SupersolutionError) as info:
            build_supersolution(fucik_ctx.d, fucik_ctx.h, fucik_ctx.phi, -0.5)
        assert info.value.t_min == pytest.approx(0.0, abs=1e-12)

    def test_supersolution_threshold_checked_first(self, fucik_ctx):
        h = -0.5 * fucik_ctx.phi
        with pytest.raises(PreconditionError):
            build_supersolution(fucik_ctx.d, h, fucik_ctx.phi, 0.25, t0=1.0)
        with pytest.raises(PreconditionError):
            build_supersolution(fucik_ctx.d, fucik_ctx.h, fucik_ctx.phi, -0.5, t0=1.0)

    def test_supersolution_above_threshold(self, fucik_ctx):
        vbar = build_supersolution(fucik_ctx.d, fucik_ctx.h, fucik_ctx.phi, 0.5, t0=1.0)
        assert vbar.sup_norm() == 0.0

    def test_pucci_problem(self, fucik_d, sine):
        h = -sine
        vbar = solve_proper(pucci_scheme(fucik_d), -h.negative_part, shift=0.0).solution
        assert vbar.min() >= 0.0
        assert pucci_constant(vbar, h) == pytest.approx(1.0, abs=1e-3)


class TestReports:
    def test_converged_needs_small_residual(self, grid100):
        with pytest.raises(InvariantViolation):
            SolveReport(solution=Field.zeros(grid100), iterations=1, final_residual=1.0,
                        status=SolveStatus.CONVERGED, tol=TOL)

    def test_ordered_pair(self, sine):
        assert OrderedPair(-sine, sine).strictly_ordered
        with pytest.raises(InvariantViolation):
            OrderedPair(sine, -sine)


class TestConvexCombination:
    def test_segment_between_two_solutions(self, fucik_ctx):
        t = 1.0
        u = t * fucik_ctx.w_lower
        v = t * fucik_ctx.w_star
        worst = convex_combination_check(fucik_ctx.d, u, v, fucik_ctx.rhs(t))
        assert set(worst) == {0.25, 0.5, 0.75, -0.5, 1.5}
        assert max(worst.values()) <= 1e-5
