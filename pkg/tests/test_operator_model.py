import numpy as np
import pytest

from src.errors import CoefficientError, DimensionError, OperatorError
from src.operators.coefficients import CoefficientField, LinearCoefficients, parse_expression
from src.operators.controlled import (
    ControlledOperator,
    PointState,
    Sign,
    asymptotic_operator,
    eval_F,
    fucik_operator,
    operator_from_controls,
    plateau_operator,
    pucci_extremal,
    pucci_operator,
)
from src.operators.structure import check_structure

STRUCTURE_TOL = 1e-9


def state(M, u, p=0.0, x=0.5):
    return PointState(M=[[M]], p=[p], u=u, x=[x])


class TestEvalF:
    def test_fucik_picks_slope_by_sign(self, fucik):
        assert eval_F(fucik, state(2.0, 1.0)) == pytest.approx(3.5)
        assert eval_F(fucik, state(2.0, -1.0)) == pytest.approx(1.5)

    def test_dimension_mismatch(self, fucik):
        s = PointState(M=np.eye(2), p=[0.0, 0.0], u=0.0, x=[0.1, 0.2])
        with pytest.raises(DimensionError):
            eval_F(fucik, s)

    def test_outside_declared_domain(self):
        op = operator_from_controls([{"A": 1.0, "f": "x"}], dim=1, lambda_min=1.0, lambda_max=1.0,
                                    gamma=0.0, delta=0.0, domain=((0.0, 1.0),))
        with pytest.raises(OperatorError):
            eval_F(op, state(0.0, 0.0, x=2.0))

    def test_inconsistent_state(self):
        with pytest.raises(DimensionError):
            PointState(M=np.eye(2), p=[0.0], u=0.0, x=[0.0])


class TestOperatorConstruction:
    def test_fucik_requires_ordered_slopes(self):
        with pytest.raises(OperatorError):
            fucik_operator(2.0, 1.0)

    def test_ellipticity_constants(self):
        with pytest.raises(OperatorError):
            ControlledOperator(controls=(LinearCoefficients.build(A=1.0),), lambda_min=2.0, lambda_max=1.0)

    def test_a0_below_source_bound(self):
        with pytest.raises(OperatorError):
            ControlledOperator(controls=(LinearCoefficients.build(A=1.0, f=3.0),), lambda_min=1.0,
                               lambda_max=1.0, a0=1.0)

    def test_a0_defaults_to_twice_the_source(self):
        op = ControlledOperator(controls=(LinearCoefficients.build(A=1.0, f=3.0),), lambda_min=1.0,
                                lambda_max=1.0)
        assert op.a0 == pytest.approx(6.0)

    def test_plateau_slope_range(self):
        with pytest.raises(OperatorError):
            plateau_operator(0.5, 1.5, slope=2.0, level=1.0)


class TestAsymptoticOperator:
    def test_drops_sources(self):
        op = plateau_operator(0.5, 1.5, slope=1.0, level=1.0)
        inf = asymptotic_operator(op)
        assert inf.is_homogeneous and inf.a0 == 0.0

    def test_idempotent(self):
        inf = asymptotic_operator(plateau_operator(0.5, 1.5, slope=1.0, level=1.0))
        assert asymptotic_operator(inf) is inf

    def test_homogeneous_operator_is_its_own_limit(self, fucik):
        assert asymptotic_operator(fucik) is fucik


class TestPucciExtremal:
    def test_weights(self):
        M = np.diag([1.0, -1.0])
        assert pucci_extremal(1.0, 2.0, "+", M) == pytest.approx(1.0)
        assert pucci_extremal(1.0, 2.0, "-", M) == pytest.approx(-1.0)

    def test_duality(self):
        rng = np.random.default_rng(0)
        B = rng.normal(size=(3, 3))
        M = B + B.T
        assert pucci_extremal(1.0, 3.0, Sign.PLUS, M) == pytest.approx(-pucci_extremal(1.0, 3.0, Sign.MINUS, -M))

    def test_rejects_nonsymmetric(self):
        with pytest.raises(OperatorError):
            pucci_extremal(1.0, 2.0, "+", np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_unknown_sign(self):
        with pytest.raises(OperatorError):
            pucci_extremal(1.0, 2.0, "sideways", np.eye(1))


class TestCheckStructure:
    @pytest.mark.parametrize("op", [
        fucik_operator(0.5, 1.5),
        pucci_operator(1.0, 2.0, gamma=0.5, dim=2),
        plateau_operator(0.5, 1.5, slope=1.0, level=1.0),
    ], ids=["fucik", "pucci2d", "plateau"])
    def test_hypotheses_hold(self, op):
        report = check_structure(op, samples=200, seed=1)
        assert report.passed(STRUCTURE_TOL), report.violations

    def test_reports_every_property(self, fucik):
        report = check_structure(fucik, samples=10)
        assert set(report.violations) == {
            "sandwich", "convexity", "homogeneity", "asymptotic_difference", "uniform_approximation",
            "scaling_monotonicity", "dyadic_limit", "pucci_duality", "coefficients",
        }

    def test_deterministic_in_seed(self, fucik):
        assert check_structure(fucik, 50, seed=4).violations == check_structure(fucik, 50, seed=4).violations

    def test_needs_samples(self, fucik):
        with pytest.raises(OperatorError):
            check_structure(fucik, samples=0)


class TestCoefficients:
    def test_expression(self):
        field = CoefficientField.of("x**2 + 1")
        np.testing.assert_allclose(field.evaluate(np.array([[2.0], [0.0]])), [5.0, 1.0])

    def test_unknown_symbol(self):
        with pytest.raises(CoefficientError):
            parse_expression("x + z")

    def test_syntax_error(self):
        with pytest.raises(CoefficientError):
            parse_expression("sin(")

    def test_constant_flags(self):
        assert CoefficientField.of(0).is_zero
        assert CoefficientField.of("2").is_constant
        assert not CoefficientField.of("x").is_constant
