"""Semismooth Newton (policy iteration without properness) for F_h[u] = g."""

import numpy as np
from loguru import logger

from src.discretization.field import Field
from src.discretization.scheme import DiscreteHJB
from src.errors import PreconditionError, SingularSystemError
from src.solvers.howard import linear_solve
from src.solvers.report import DAMPING_FLOOR, DEFAULT_TOL, NEWTON_CAP, SolveReport, SolveStatus


def semismooth_newton(d: DiscreteHJB, g: Field, u0: Field, damping: float = 1.0,
                      tol: float = DEFAULT_TOL, cap: int = NEWTON_CAP, blowup: float = np.inf,
                      damping_floor: float = DAMPING_FLOOR) -> SolveReport:
    """
    Newton iteration on the non-proper system F_h[u] = g.

    Each step freezes the argmax policy π at u, solves L_π w = g + f~_π and
    moves to u + τ(w - u). τ starts at ``damping`` and is halved while the
    residual increases, down to ``damping_floor``. A singular linearization
    ends the run with status ``singular``; a repeated full-step policy with
    status ``policy_cycle``.
    """
    if not (0.0 < damping <= 1.0):
        raise PreconditionError(f"damping must lie in (0, 1], got {damping}")
    if not d.grid.matches(g.grid) or not d.grid.matches(u0.grid):
        raise PreconditionError("Newton inputs live on different grids")

    def residual_of(values: np.ndarray) -> float:
        return float(np.abs(d.evaluate(values) - g.values).max())

    u = u0.values.copy()
    r = residual_of(u)
    history = [r]
    if r <= tol:
        return SolveReport(solution=u0, iterations=0, final_residual=r,
                           status=SolveStatus.CONVERGED, tol=tol, history=tuple(history))

    full_steps = set()
    for it in range(1, cap + 1):
        policy = d.policy(u)
        L, source = d.frozen(policy)
        try:
            w = linear_solve(L, g.values + source)
        except SingularSystemError:
            logger.debug("Newton step {} hit a singular linearization", it)
            return SolveReport(solution=Field(d.grid, u), iterations=it, final_residual=r,
                               status=SolveStatus.SINGULAR, tol=tol, history=tuple(history))

        tau = damping
        while True:
            candidate = u + tau * (w - u)
            r_new = residual_of(candidate)
            if r_new < r or tau <= damping_floor:
                break
            tau *= 0.5

        if tau == 1.0:
            key = policy.tobytes()
            if key in full_steps and r_new >= r:
                return SolveReport(solution=Field(d.grid, u), iterations=it, final_residual=r,
                                   status=SolveStatus.POLICY_CYCLE, tol=tol, history=tuple(history))
            full_steps.add(key)

        u, r = candidate, r_new
        history.append(r)
        logger.debug("Newton step {}: tau={:.4f} residual={:.3e}", it, tau, r)

        if r <= tol:
            return SolveReport(solution=Field(d.grid, u), iterations=it, final_residual=r,
                               status=SolveStatus.CONVERGED, tol=tol, history=tuple(history))
        if not np.all(np.isfinite(u)) or np.abs(u).max() > blowup:
            last = Field(d.grid, np.nan_to_num(u, nan=0.0, posinf=blowup, neginf=-blowup))
            return SolveReport(solution=last, iterations=it, final_residual=r,
                               status=SolveStatus.DIVERGED, tol=tol, history=tuple(history))

    return SolveReport(solution=Field(d.grid, u), iterations=cap, final_residual=r,
                       status=SolveStatus.ITERATION_CAP, tol=tol, history=tuple(history))
