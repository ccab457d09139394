"""
Numerical solvability verdicts for F_h[u] = h + tφ.

A Perron sequence increasing from a subsolution either converges to the
minimal solution or leaves every a-priori bound. Escaping past
``blowup_factor`` times the bound is read as non-existence: the verdict is a
numerical certificate, not a proof.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

from loguru import logger

from src.ambrosetti_prodi.bounds import apriori_bound
from src.ambrosetti_prodi.context import ProblemContext
from src.discretization.field import Field
from src.errors import InvariantViolation
from src.solvers.constructions import build_subsolution
from src.solvers.perron import perron_iterate
from src.solvers.report import SolveStatus


class Verdict(str, Enum):
    SOLVABLE = "solvable"
    NO_SOLUTION = "no_solution"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SolvabilityVerdict:
    """
    Outcome of one solvability test.

    Attributes:
        status: SOLVABLE, NO_SOLUTION or INCONCLUSIVE.
        t: Parameter value tested.
        witness: Minimal solution when SOLVABLE.
        evidence: Iterations, final residual, peak norm, cutoff and bound.
    """

    status: Verdict
    t: float
    witness: Optional[Field] = None
    evidence: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.status is Verdict.SOLVABLE:
            if self.witness is None:
                raise InvariantViolation("solvable_witness", f"SOLVABLE at t={self.t} without a witness")
            if not self.evidence.get("residual", 0.0) <= self.evidence.get("tol", float("inf")):
                raise InvariantViolation("solvable_witness", f"witness residual too large at t={self.t}")

    @property
    def solvable(self) -> bool:
        return self.status is Verdict.SOLVABLE

    def to_summary(self) -> Dict[str, Any]:
        return {"t": self.t, "status": self.status.value, **self.evidence}


def solvable(ctx: ProblemContext, t: float, cap: Optional[int] = None) -> SolvabilityVerdict:
    """Runs Perron from the explicit subsolution at ``t`` and classifies the outcome."""
    s = ctx.settings
    t = float(t)
    cap = cap or s.perron_cap
    g = ctx.rhs(t)
    bound = apriori_bound(ctx.lambda_plus, ctx.lambda_minus, ctx.a0, ctx.norm(g), ctx.calibration.c_cal)

    sub = build_subsolution(ctx.d, ctx.h, ctx.phi, (t,), margin=s.subsolution_margin, bound=bound,
                            shift=s.shift, tol=s.tol, cap=s.perron_cap, howard_cap=s.howard_cap)
    cutoff = s.blowup_factor * max(bound, sub.sup_norm())
    report = perron_iterate(ctx.d, g, sub, shift=s.shift, cap=cap, blowup=cutoff, tol=s.tol,
                            howard_cap=s.howard_cap)

    evidence = {
        "iterations": report.iterations,
        "solver_status": report.status.value,
        "residual": report.final_residual,
        "tol": report.tol,
        "peak_norm": max(report.history),
        "cutoff": cutoff,
        "bound": bound,
    }
    if report.status is SolveStatus.CONVERGED:
        verdict = SolvabilityVerdict(Verdict.SOLVABLE, t, report.solution, evidence)
    elif report.status is SolveStatus.DIVERGED:
        verdict = SolvabilityVerdict(Verdict.NO_SOLUTION, t, None, evidence)
    else:
        verdict = SolvabilityVerdict(Verdict.INCONCLUSIVE, t, None, evidence)
        logger.warning("Inconclusive verdict at t={:.6f} after {} Perron steps", t, report.iterations)

    logger.debug("t={:.6f}: {} ({} steps)", t, verdict.status.value, report.iterations)
    return verdict
