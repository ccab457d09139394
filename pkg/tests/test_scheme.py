import numpy as np
import pytest

from src.discretization.field import Field
from src.discretization.grid import DomainSpec, build_grid
from src.discretization.scheme import apply_Fh, comparison_probe, discretize
from src.errors import DiscretizationError, GridError
from src.operators.controlled import fucik_operator, operator_from_controls, plateau_operator, pucci_operator

CONSISTENCY_TOL = 1e-3


class TestDiscretize:
    def test_laplacian_consistency(self, laplace_d, sine):
        np.testing.assert_allclose(apply_Fh(laplace_d, sine).values, -sine.values, atol=CONSISTENCY_TOL)

    def test_fucik_consistency(self, fucik_d, sine):
        # sin > 0 picks the b-slope, -sin < 0 the a-slope
        np.testing.assert_allclose(apply_Fh(fucik_d, sine).values, 0.5 * sine.values, atol=CONSISTENCY_TOL)
        np.testing.assert_allclose(apply_Fh(fucik_d, -sine).values, 0.5 * sine.values, atol=CONSISTENCY_TOL)

    def test_dimension_mismatch(self, grid100):
        with pytest.raises(DiscretizationError):
            discretize(fucik_operator(0.5, 1.5, dim=2), grid100)

    def test_off_diagonal_diffusion_in_2d(self):
        grid = build_grid(DomainSpec(extents=((0.0, 1.0), (0.0, 1.0)), n=(5, 5)))
        op = operator_from_controls([{"A": [[1.0, 0.2], [0.2, 1.0]]}], dim=2, lambda_min=0.5,
                                    lambda_max=1.5, gamma=0.0, delta=0.0)
        with pytest.raises(DiscretizationError):
            discretize(op, grid)

    def test_sources_are_normalized(self, grid100):
        d = discretize(plateau_operator(0.5, 1.5, slope=1.0, level=2.0), grid100)
        assert d.sources.min() == 0.0
        assert np.all(d.sources.min(axis=0) == 0.0)
        assert not d.is_homogeneous

    def test_homogeneous_copy(self, grid100, fucik_d):
        d = discretize(plateau_operator(0.5, 1.5, slope=1.0, level=2.0), grid100)
        inf = d.homogeneous()
        assert inf.is_homogeneous and inf.a0 == 0.0
        assert fucik_d.homogeneous() is fucik_d

    def test_2d_pucci(self):
        grid = build_grid(DomainSpec(extents=((0.0, 1.0), (0.0, 1.0)), n=(7, 7)))
        d = discretize(pucci_operator(1.0, 2.0, gamma=0.3, dim=2), grid)
        assert d.n_controls == 4 * 9
        assert d.matrices[0].shape == (49, 49)

    def test_apply_on_foreign_grid(self, fucik_d, grid200):
        with pytest.raises(GridError):
            apply_Fh(fucik_d, Field.zeros(grid200))


class TestComparisonProbe:
    @pytest.mark.parametrize("op", [
        fucik_operator(0.5, 1.5),
        pucci_operator(1.0, 2.0, gamma=1.0),
    ], ids=["fucik", "pucci_drift"])
    def test_no_violations(self, op, grid100):
        report = comparison_probe(discretize(op, grid100), samples=100, seed=2)
        assert report["comparison"] <= 1e-12
        assert report["monotonicity"] <= 1e-12
