from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.discretization.field import Field
from src.errors import InvariantViolation

DEFAULT_TOL = 1e-8
HOWARD_CAP = 500
PERRON_CAP = 10_000
NEWTON_CAP = 200
DAMPING_FLOOR = 1.0 / 64.0


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    ITERATION_CAP = "iteration_cap"
    POLICY_CYCLE = "policy_cycle"
    SINGULAR = "singular"


@dataclass(frozen=True)
class SolveReport:
    """
    Outcome of one discrete solve.

    Attributes:
        solution: Last iterate (the solution when converged).
        iterations: Outer iterations performed.
        final_residual: Sup-norm residual of the solved equation at ``solution``.
        status: Why the solver stopped.
        tol: Requested residual tolerance.
        history: Per-iteration trace (residuals for Newton, sup-norms for Perron).
    """

    solution: Optional[Field]
    iterations: int
    final_residual: float
    status: SolveStatus
    tol: float = DEFAULT_TOL
    history: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.status is SolveStatus.CONVERGED and not self.final_residual <= self.tol:
            raise InvariantViolation(
                "converged_residual",
                f"status converged with residual {self.final_residual:.3e} > tol {self.tol:.1e}",
            )

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED


@dataclass(frozen=True)
class OrderedPair:
    """Two solutions with ``lower <= upper`` nodewise."""

    lower: Field
    upper: Field
    tol: float = 1e-10

    def __post_init__(self):
        gap = self.upper.values - self.lower.values
        if np.any(gap < -self.tol):
            raise InvariantViolation(
                "ordered_pair", f"lower exceeds upper by {float(-gap.min()):.3e}"
            )

    @property
    def strictly_ordered(self) -> bool:
        return bool(np.all(self.upper.values - self.lower.values > self.tol))
