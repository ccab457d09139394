"""
Problem context of the Ambrosetti-Prodi family F_h[u] = h + tφ.

Everything that does not depend on t is computed once: the principal
half-eigenpairs of F∞, the direction φ = φ₁⁺ (‖φ‖∞ = 1) and the asymptotic
profiles w* = -φ/λ₁⁺ (upper branch) and w_* <= 0 with F∞[w_*] = φ (lower
branch).
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

from loguru import logger

from src.config import CalibrationSection, SolverSettings
from src.discretization.field import Field
from src.discretization.scheme import DiscreteHJB
from src.errors import PreconditionError, SolverError
from src.solvers.perron import perron_iterate
from src.spectral.eigen import EigenPair, principal_pair


@dataclass(frozen=True, eq=False)
class ProblemContext:
    d: DiscreteHJB
    h: Field
    plus: EigenPair
    minus: EigenPair
    settings: SolverSettings = field(default_factory=SolverSettings)
    calibration: CalibrationSection = field(default_factory=CalibrationSection)

    @property
    def grid(self):
        return self.d.grid

    @property
    def phi(self) -> Field:
        return self.plus.phi

    @property
    def lambda_plus(self) -> float:
        return self.plus.value

    @property
    def lambda_minus(self) -> float:
        return self.minus.value

    @property
    def a0(self) -> float:
        return self.d.a0

    @property
    def p(self) -> float:
        return self.settings.norm_p

    def rhs(self, t: float) -> Field:
        """h + tφ."""
        return self.h + float(t) * self.phi

    def norm(self, u: Field) -> float:
        return u.lp_norm(self.p)

    @cached_property
    def w_star(self) -> Field:
        return self.phi / (-self.lambda_plus)

    @cached_property
    def w_lower(self) -> Field:
        """Nonpositive solution of F∞[w] = φ, by decreasing Perron iteration from 0."""
        s = self.settings
        report = perron_iterate(self.d.homogeneous(), self.phi, Field.zeros(self.grid),
                                shift=s.shift, cap=s.perron_cap, tol=s.tol, from_above=True,
                                howard_cap=s.howard_cap)
        if not report.converged:
            raise SolverError(f"Lower asymptotic profile did not converge ({report.status.value})")
        logger.debug("w_* computed in {} Perron steps", report.iterations)
        return report.solution

    def with_h(self, h: Field) -> "ProblemContext":
        """Same operator and eigen data, different inhomogeneity."""
        return replace(self, h=h)


def prepare_problem(d: DiscreteHJB, h: Field, settings: Optional[SolverSettings] = None,
                    calibration: Optional[CalibrationSection] = None) -> ProblemContext:
    """
    Computes the eigen data of F∞ and checks λ₁⁺ < 0 < λ₁⁻.

    Raises:
        PreconditionError: the half-eigenvalues do not change sign.
    """
    settings = settings or SolverSettings()
    calibration = calibration or CalibrationSection()
    if not d.grid.matches(h.grid):
        raise PreconditionError("h and the discretization live on different grids")

    plus, minus = principal_pair(d.homogeneous(), **settings.eigen_options())
    logger.info("'{}': lambda_1^+ = {:.6f}, lambda_1^- = {:.6f}", d.name, plus.value, minus.value)
    if not (plus.value < 0.0 < minus.value):
        raise PreconditionError(
            f"Need lambda_1^+ < 0 < lambda_1^-, got ({plus.value:.6f}, {minus.value:.6f})"
        )
    return ProblemContext(d=d, h=h, plus=plus, minus=minus, settings=settings, calibration=calibration)
