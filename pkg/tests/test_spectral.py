import numpy as np
import pytest

from src.config import SolverSettings
from src.discretization.field import Field
from src.discretization.grid import DomainSpec, HoleSpec, build_grid, distance_field
from src.discretization.scheme import apply_Fh, discretize
from src.errors import CertificateError, InvariantViolation, SpectralError
from src.operators.controlled import Sign, laplacian_operator, plateau_operator, pucci_operator
from src.solvers.howard import solve_proper
from src.spectral.certificate import eigen_lower_bound_certificate
from src.spectral.eigen import (
    EigenPair,
    collatz_wielandt,
    domain_monotonicity_gap,
    hopf_ratio,
    principal_half_eigen,
    principal_pair,
)

# second-order error of the three-point stencil at n = 100
DISCRETE_TOL = 1e-3


@pytest.fixture(scope="module")
def fucik_pair(fucik_d):
    return principal_pair(fucik_d)


class TestPrincipalEigen:
    def test_fucik_values(self, fucik_pair):
        plus, minus = fucik_pair
        assert plus.value == pytest.approx(-0.5, abs=DISCRETE_TOL)
        assert minus.value == pytest.approx(0.5, abs=DISCRETE_TOL)

    def test_brackets_and_signs(self, fucik_pair):
        plus, minus = fucik_pair
        for pair in (plus, minus):
            assert pair.width <= 1e-10
            assert pair.residual <= 1e-8
            assert pair.phi.sup_norm() == pytest.approx(1.0)
        assert plus.phi.min() > 0.0 and minus.phi.max() < 0.0

    def test_eigenfunction_is_sine(self, fucik_pair, sine):
        assert fucik_pair[0].phi.distance(sine / sine.sup_norm()) < DISCRETE_TOL

    def test_pucci_values(self, grid100):
        plus, minus = principal_pair(discretize(pucci_operator(1.0, 2.0), grid100))
        assert plus.value == pytest.approx(1.0, abs=DISCRETE_TOL)
        assert minus.value == pytest.approx(2.0, abs=2 * DISCRETE_TOL)

    def test_hopf_constants(self, fucik_pair):
        c0, C0 = fucik_pair[0].hopf
        assert 0.0 < c0 <= C0

    def test_rejects_sources(self, grid100):
        d = discretize(plateau_operator(0.5, 1.5, 1.0, 1.0), grid100)
        with pytest.raises(SpectralError):
            principal_half_eigen(d, "+")

    def test_rejects_bad_tolerance(self, fucik_d):
        with pytest.raises(SpectralError):
            principal_half_eigen(fucik_d, "+", tol=0.0)

    def test_start_must_have_the_sign(self, fucik_d, sine):
        with pytest.raises(SpectralError):
            principal_half_eigen(fucik_d, Sign.PLUS, start=-sine)

    def test_iteration_cap(self, fucik_d):
        with pytest.raises(SpectralError):
            principal_half_eigen(fucik_d, "+", cap=1)


class TestEigenHelpers:
    def test_collatz_wielandt_on_sine(self, laplace_d, sine):
        lo, hi = collatz_wielandt(laplace_d, sine.values)
        assert hi - lo < 1e-10
        assert lo == pytest.approx(1.0, abs=DISCRETE_TOL)

    def test_hopf_ratio_needs_one_sign(self, grid100):
        mixed = Field.from_function(grid100, lambda x: np.sin(2 * x))
        with pytest.raises(SpectralError):
            hopf_ratio(mixed, distance_field(grid100))

    def test_pair_invariants(self, fucik_pair):
        plus = fucik_pair[0]
        with pytest.raises(InvariantViolation):
            EigenPair(value=plus.value, phi=-plus.phi, sign=Sign.PLUS, bracket=plus.bracket,
                      iterations=1, residual=0.0, hopf=plus.hopf)
        with pytest.raises(InvariantViolation):
            EigenPair(value=plus.bracket[1] + 1.0, phi=plus.phi, sign=Sign.PLUS,
                      bracket=plus.bracket, iterations=1, residual=0.0, hopf=plus.hopf)

    def test_pair_respects_tolerance(self, fucik_pair):
        plus = fucik_pair[0]
        assert plus.tol == 1e-10
        assert plus.width <= plus.tol and plus.residual <= plus.tol
        wide = (plus.value - 1e-6, plus.value + 1e-6)
        with pytest.raises(InvariantViolation, match="eigen_width"):
            EigenPair(value=plus.value, phi=plus.phi, sign=Sign.PLUS, bracket=wide,
                      iterations=1, residual=0.0, hopf=plus.hopf, tol=1e-10)
        with pytest.raises(InvariantViolation, match="eigen_residual"):
            EigenPair(value=plus.value, phi=plus.phi, sign=Sign.PLUS, bracket=plus.bracket,
                      iterations=1, residual=1e-6, hopf=plus.hopf, tol=1e-10)
        loose = EigenPair(value=plus.value, phi=plus.phi, sign=Sign.PLUS, bracket=wide,
                          iterations=1, residual=1e-6, hopf=plus.hopf, tol=1e-5)
        assert loose.width <= loose.tol

    def test_solver_settings_reach_the_iteration(self, monkeypatch, fucik_d):
        caps, floors = [], []

        def recording_solve(*args, **kwargs):
            caps.append(kwargs["cap"])
            return solve_proper(*args, **kwargs)

        def recording_ratios(d, v, ratio_floor):
            floors.append(ratio_floor)
            return collatz_wielandt(d, v, ratio_floor)

        monkeypatch.setattr("src.spectral.eigen.solve_proper", recording_solve)
        monkeypatch.setattr("src.spectral.eigen.collatz_wielandt", recording_ratios)
        settings = SolverSettings(howard_cap=40, ratio_floor=1e-6)
        principal_pair(fucik_d, **settings.eigen_options())
        assert caps and set(caps) == {40}
        assert floors and set(floors) == {1e-6}


class TestDomainMonotonicity:
    def test_middle_third_removed(self, grid200):
        hole = HoleSpec(lower=(np.pi / 3,), upper=(2 * np.pi / 3,))
        full, reduced = domain_monotonicity_gap(laplacian_operator(1), grid200, hole)
        assert full == pytest.approx(1.0, abs=DISCRETE_TOL)
        assert reduced == pytest.approx(9.0, abs=1e-2)
        assert reduced > full

    def test_no_hole(self, grid100):
        full, reduced = domain_monotonicity_gap(laplacian_operator(1), grid100, None)
        assert full == reduced

    def test_square_with_centered_hole(self):
        extents = ((0.0, np.pi), (0.0, np.pi))
        grid = build_grid(DomainSpec(extents=extents, n=(24, 24)))
        # centred box covering a tenth of the area
        hole = HoleSpec.centered_box(extents, np.sqrt(0.1) * np.pi)
        full, reduced = domain_monotonicity_gap(laplacian_operator(2), grid, hole)
        assert full == pytest.approx(2.0, abs=2e-2)
        assert reduced > full


class TestCertificate:
    def test_exact_supersolution_gives_zero(self, laplace_d, sine):
        eps = apply_Fh(laplace_d, sine).positive_part
        assert eigen_lower_bound_certificate(laplace_d, sine, eps) == 0.0

    def test_bound_is_below_eigenvalue(self, fucik_d, fucik_pair):
        plus = fucik_pair[0]
        eps = apply_Fh(fucik_d, plus.phi).positive_part
        bound = eigen_lower_bound_certificate(fucik_d, plus.phi, eps)
        assert bound < 0.0
        assert bound <= plus.value + 1e-8

    def test_invariant_under_scaling(self, fucik_d, fucik_pair):
        phi = fucik_pair[0].phi
        eps = apply_Fh(fucik_d, phi).positive_part
        assert eigen_lower_bound_certificate(fucik_d, 3.0 * phi, 3.0 * eps) == pytest.approx(
            eigen_lower_bound_certificate(fucik_d, phi, eps))

    def test_rejects_negative_eps(self, laplace_d, sine):
        with pytest.raises(CertificateError):
            eigen_lower_bound_certificate(laplace_d, sine, -sine)

    def test_rejects_insufficient_eps(self, fucik_d, sine):
        with pytest.raises(CertificateError):
            eigen_lower_bound_certificate(fucik_d, sine, Field.zeros(sine.grid))

    def test_rejects_large_negative_part(self, fucik_d, sine):
        w = -sine
        eps = apply_Fh(fucik_d, w).positive_part
        with pytest.raises(CertificateError):
            eigen_lower_bound_certificate(fucik_d, w, eps)

    def test_rejects_zero_field(self, laplace_d, grid100):
        with pytest.raises(CertificateError):
            eigen_lower_bound_certificate(laplace_d, Field.zeros(grid100), Field.zeros(grid100))

    def test_rejects_sources(self, grid100, sine):
        d = discretize(plateau_operator(0.5, 1.5, 1.0, 1.0), grid100)
        with pytest.raises(CertificateError):
            eigen_lower_bound_certificate(d, sine, sine)
