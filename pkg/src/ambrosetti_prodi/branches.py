"""
Lower and upper solution branches for t > t*.

The lower branch is the minimal solution reached by Perron iteration from
the explicit subsolution. The upper branch is found by semismooth Newton
from the asymptotic guess t·w*, falling back to the previous upper solution
and finally to a multi-start census.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.ambrosetti_prodi.census import count_solutions
from src.ambrosetti_prodi.context import ProblemContext
from src.ambrosetti_prodi.verdicts import Verdict, solvable
from src.discretization.field import Field
from src.errors import InvariantViolation, PreconditionError, SolverError
from src.solvers.newton import semismooth_newton
from src.solvers.report import OrderedPair


@dataclass(frozen=True)
class BranchPoint:
    """
    Both solutions at one parameter value.

    ``u_up`` is None when the point is incomplete (no second solution found).
    """

    t: float
    u_low: Field
    u_up: Optional[Field]
    residual_low: float
    residual_up: float
    tol: float

    def __post_init__(self):
        if self.residual_low > self.tol:
            raise InvariantViolation("branch_residual", f"lower residual {self.residual_low:.3e} at t={self.t}")
        if self.u_up is not None:
            if self.residual_up > self.tol:
                raise InvariantViolation("branch_residual", f"upper residual {self.residual_up:.3e} at t={self.t}")
            OrderedPair(self.u_low, self.u_up)

    @property
    def complete(self) -> bool:
        return self.u_up is not None

    @property
    def status(self) -> str:
        return "complete" if self.complete else "incomplete"

    @property
    def strictly_ordered(self) -> bool:
        return self.complete and OrderedPair(self.u_low, self.u_up).strictly_ordered

    def to_frame(self):
        df = self.u_low.to_frame("u_low")
        df["u_up"] = self.u_up.values if self.complete else np.nan
        df.insert(0, "t", self.t)
        return df


def _upper_solution(ctx: ProblemContext, t: float, u_low: Field,
                    previous: Optional[Field]) -> Tuple[Optional[Field], float]:
    s = ctx.settings
    g = ctx.rhs(t)
    starts = [("asymptotic", t * ctx.w_star)]
    if previous is not None:
        starts.append(("continuation", previous))

    for label, start in starts:
        report = semismooth_newton(ctx.d, g, start, damping=s.damping, tol=s.tol, cap=s.newton_cap,
                                   damping_floor=s.damping_floor)
        if report.converged and report.solution.distance(u_low) > s.cluster_radius:
            return report.solution, report.final_residual
        logger.warning("Upper branch at t={:.4f}: Newton from the {} start ended with {}",
                       t, label, report.status.value)

    census = count_solutions(ctx, t)
    above = [u for u in census.solutions if u.distance(u_low) > s.cluster_radius]
    if not above:
        return None, np.inf
    upper = max(above, key=lambda u: float(np.mean(u.values)))
    residual = float(np.abs(ctx.d.evaluate(upper.values) - g.values).max())
    return upper, residual


def trace_branches(ctx: ProblemContext, t_samples: Sequence[float],
                   t_star: Optional[float] = None) -> List[BranchPoint]:
    """
    BranchPoint for every t in ``t_samples`` (processed in increasing order).

    Raises:
        PreconditionError: a sample does not exceed ``t_star`` + tol.
        SolverError: the lower branch cannot be computed at some sample.
    """
    s = ctx.settings
    points, previous = [], None
    for t in sorted(float(v) for v in t_samples):
        if t_star is not None and t <= t_star + s.tstar_tol:
            raise PreconditionError(f"Branch sample t={t} does not exceed t*={t_star:.6f}")
        verdict = solvable(ctx, t)
        if verdict.status is not Verdict.SOLVABLE:
            raise SolverError(f"Lower branch unavailable at t={t}: {verdict.status.value}")
        u_low = verdict.witness

        u_up, residual_up = _upper_solution(ctx, t, u_low, previous)
        if u_up is None:
            logger.warning("Branch point t={:.4f} is INCOMPLETE", t)
        else:
            previous = u_up
        points.append(BranchPoint(t=t, u_low=u_low, u_up=u_up, residual_low=verdict.evidence["residual"],
                                  residual_up=residual_up, tol=verdict.evidence["tol"]))
    return points


def lower_branch_gaps(points: Sequence[BranchPoint]) -> List[float]:
    """min over nodes of u_low(s) - u_low(t) for consecutive s < t; positive means strictly decreasing."""
    return [float((a.u_low - b.u_low).min()) for a, b in zip(points, points[1:])]


def upper_branch_measure_fraction(u_s: Field, u_t: Field) -> float:
    """Fraction of the unknowns where u_s < u_t."""
    return float(np.count_nonzero(u_s.values < u_t.values)) / u_s.grid.size


def upper_branch_pointwise(points: Sequence[BranchPoint]) -> bool:
    """Whether the sampled upper branch is nodewise nondecreasing (logged, never asserted)."""
    ups = [p.u_up for p in points if p.complete]
    return all(bool(np.all(a.values <= b.values)) for a, b in zip(ups, ups[1:]))


def asymptotic_floor(t_star: Optional[float]) -> float:
    """Smallest admissible t_large: max(10, 100|t*|)."""
    return max(10.0, 100.0 * abs(t_star)) if t_star is not None else 10.0


def slope_deviations(ctx: ProblemContext, point: BranchPoint) -> Tuple[float, float]:
    """(‖u_low/t - w_*‖∞, ‖u_up/t - w*‖∞) of a complete branch point."""
    if not point.complete:
        raise SolverError(f"No upper solution at t={point.t}")
    dev_low = (point.u_low / point.t - ctx.w_lower).sup_norm()
    dev_up = (point.u_up / point.t - ctx.w_star).sup_norm()
    logger.info("t={}: |u_low/t - w_*| = {:.4e}, |u_up/t - w*| = {:.4e}", point.t, dev_low, dev_up)
    return dev_low, dev_up


def asymptotic_slopes(ctx: ProblemContext, t_large: float,
                      t_star: Optional[float] = None) -> Tuple[float, float]:
    """
    (‖u_low/t - w_*‖∞, ‖u_up/t - w*‖∞) at t = ``t_large``.

    Raises:
        PreconditionError: t_large <= max(10, 100|t*|).
        SolverError: the upper solution is not found.
    """
    floor = asymptotic_floor(t_star)
    if t_large <= floor:
        raise PreconditionError(f"t_large={t_large} must exceed {floor}")
    return slope_deviations(ctx, trace_branches(ctx, [t_large])[0])
