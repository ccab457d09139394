import numpy as np
import pytest

from src.discretization.field import Field
from src.discretization.grid import DomainSpec, HoleSpec, build_grid, distance_field, restrict_domain
from src.errors import GridError

PI = float(np.pi)


class TestBuildGrid:
    def test_spacing_and_size(self, grid100):
        assert grid100.size == 100
        assert grid100.h[0] == pytest.approx(PI / 101)
        assert grid100.coordinates[0, 0] == pytest.approx(PI / 101)

    def test_two_dimensional(self):
        grid = build_grid(DomainSpec(extents=((0.0, 1.0), (0.0, 2.0)), n=(9, 19)))
        assert grid.size == 171
        assert grid.h == pytest.approx((0.1, 0.1))

    @pytest.mark.parametrize("extents,n", [
        (((0.0, 0.0),), (10,)),
        (((0.0, 1.0),), (2,)),
        (((0.0, 1.0),) * 3, (5, 5, 5)),
        (((0.0, 1.0),), (5, 5)),
    ])
    def test_rejects_bad_specs(self, extents, n):
        with pytest.raises(GridError):
            build_grid(DomainSpec(extents=extents, n=n))

    def test_hole_covering_everything(self):
        with pytest.raises(GridError):
            build_grid(DomainSpec(extents=((0.0, 1.0),), n=(9,),
                                  holes=(HoleSpec(lower=(0.0,), upper=(1.0,)),)))


class TestHoleSpec:
    def test_inverted_box(self):
        with pytest.raises(GridError):
            HoleSpec(lower=(1.0,), upper=(0.0,))

    def test_disk_needs_center(self):
        with pytest.raises(GridError):
            HoleSpec(kind="disk", radius=0.1)

    def test_centered_box(self):
        hole = HoleSpec.centered_box(((0.0, 3.0),), 1.0)
        assert hole.lower == pytest.approx((1.0,)) and hole.upper == pytest.approx((2.0,))

    def test_from_dict(self):
        hole = HoleSpec.from_dict({"kind": "disk", "center": [0.5, 0.5], "radius": 0.1})
        assert hole.dim == 2


class TestRestrictDomain:
    def test_middle_third(self, grid200):
        hole = HoleSpec(lower=(PI / 3,), upper=(2 * PI / 3,))
        reduced = restrict_domain(grid200, hole)
        # nodes 67..134 of 200 sit in the closed middle third
        assert reduced.size == 132
        assert reduced.connectivity_report() == {"components": 2, "enclosed": 0}

    def test_none_is_identity(self, grid100):
        assert restrict_domain(grid100, None) is grid100

    def test_hole_outside_domain(self, grid100):
        with pytest.raises(GridError):
            restrict_domain(grid100, HoleSpec(lower=(3.0,), upper=(4.0,)))

    def test_enclosed_component(self):
        grid = build_grid(DomainSpec(extents=((0.0, 1.0), (0.0, 1.0)), n=(19, 19)))
        ring = [HoleSpec(lower=(0.3, 0.3), upper=(0.7, 0.35)), HoleSpec(lower=(0.3, 0.65), upper=(0.7, 0.7)),
                HoleSpec(lower=(0.3, 0.3), upper=(0.35, 0.7)), HoleSpec(lower=(0.65, 0.3), upper=(0.7, 0.7))]
        report = restrict_domain(grid, ring).connectivity_report()
        assert report["enclosed"] == 1


class TestDistanceField:
    def test_interval(self, grid200):
        d = distance_field(grid200)
        assert d.min() == pytest.approx(PI / 201)
        assert 1.5 < d.max() <= PI / 2

    def test_hole_counts_as_boundary(self, grid200):
        reduced = restrict_domain(grid200, HoleSpec(lower=(PI / 3,), upper=(2 * PI / 3,)))
        assert distance_field(reduced).max() <= PI / 6 + 1e-12


class TestField:
    def test_nonfinite_rejected(self, grid100):
        with pytest.raises(GridError):
            Field(grid100, np.full(100, np.nan))

    def test_wrong_size(self, grid100):
        with pytest.raises(GridError):
            Field(grid100, np.zeros(5))

    def test_grid_mismatch(self, grid100, grid200):
        with pytest.raises(GridError):
            Field.zeros(grid100) + Field.zeros(grid200)

    def test_parts_and_norms(self, grid100):
        u = Field.from_function(grid100, lambda x: np.cos(x))
        assert (u.positive_part - u.negative_part).distance(u) == 0.0
        assert u.sup_norm() == pytest.approx(np.abs(np.cos(grid100.coordinates[:, 0])).max())
        one = Field.constant(grid100, 1.0)
        assert one.lp_norm(1.0) == pytest.approx(100 * PI / 101)

    def test_values_are_read_only(self, grid100):
        u = Field.zeros(grid100)
        with pytest.raises(ValueError):
            u.values[0] = 1.0

    def test_expression(self, grid100):
        u = Field.from_expression(grid100, "sin(x)")
        np.testing.assert_allclose(u.values, np.sin(grid100.coordinates[:, 0]))
