"""
Monotone Perron iteration through a hierarchy of proper Dirichlet problems.

Starting from a subsolution u_0 (F_h[u_0] >= g), each step solves

    F_h[u_{m+1}] - s·u_{m+1} = g - s·u_m

with s > δ. Comparison makes the sequence nondecreasing; it converges to the
minimal solution above u_0 or escapes every a-priori bound. The mirrored
variant starts from a supersolution and decreases.
"""

from typing import Optional

import numpy as np
from loguru import logger

from src.discretization.field import Field
from src.discretization.scheme import DiscreteHJB, apply_Fh
from src.errors import InvariantViolation, PreconditionError
from src.solvers.howard import check_shift, default_shift, solve_proper
from src.solvers.report import DEFAULT_TOL, HOWARD_CAP, PERRON_CAP, SolveReport, SolveStatus

MONOTONE_TOL = 1e-9


def perron_iterate(d: DiscreteHJB, g: Field, u0: Field, shift: Optional[float] = None,
                   cap: int = PERRON_CAP, blowup: float = np.inf, tol: float = DEFAULT_TOL,
                   from_above: bool = False, howard_cap: int = HOWARD_CAP) -> SolveReport:
    """
    Runs the monotone iteration from ``u0``.

    Args:
        d: Discretized operator.
        g: Right-hand side.
        u0: Subsolution (or supersolution when ``from_above``).
        shift: Properness shift, default δ + 1.
        cap: Maximum number of proper solves.
        blowup: Sup-norm past which the sequence is declared divergent.
        tol: Residual tolerance on F_h[u] - g.
        from_above: Iterate downward from a supersolution.
        howard_cap: Policy-iteration cap of every proper solve.

    Returns:
        SolveReport whose history holds the sup-norm of every iterate.
    """
    shift = default_shift(d) if shift is None else float(shift)
    check_shift(d, shift)

    defect = (apply_Fh(d, u0) - g).values
    if from_above and defect.max() > tol:
        raise PreconditionError(f"Starting field is not a supersolution (defect {defect.max():.3e})")
    if not from_above and defect.min() < -tol:
        raise PreconditionError(f"Starting field is not a subsolution (defect {defect.min():.3e})")

    direction = -1.0 if from_above else 1.0
    accept = tol * max(1.0, g.sup_norm())
    u = u0
    history = [u0.sup_norm()]
    residual = float(np.abs(defect).max())

    for m in range(1, cap + 1):
        step = solve_proper(d, g - shift * u, shift=shift, tol=tol, cap=howard_cap)
        nxt = step.solution

        drop = direction * (u.values - nxt.values)
        if drop.max() > MONOTONE_TOL * (1.0 + u.sup_norm()):
            raise InvariantViolation(
                "perron_monotone",
                f"iterate {m} moved against the monotone direction by {drop.max():.3e}",
            )

        u = nxt
        history.append(u.sup_norm())
        residual = (apply_Fh(d, u) - g).sup_norm()

        if residual <= accept:
            logger.debug("Perron converged after {} steps (residual {:.2e})", m, residual)
            return SolveReport(solution=u, iterations=m, final_residual=residual,
                               status=SolveStatus.CONVERGED, tol=accept, history=tuple(history))
        if history[-1] > blowup:
            logger.debug("Perron diverged after {} steps (|u| = {:.3e} > {:.3e})", m, history[-1], blowup)
            return SolveReport(solution=u, iterations=m, final_residual=residual,
                               status=SolveStatus.DIVERGED, tol=tol, history=tuple(history))

    logger.warning("Perron iteration hit the cap of {} steps (residual {:.2e})", cap, residual)
    return SolveReport(solution=u, iterations=cap, final_residual=residual,
                       status=SolveStatus.ITERATION_CAP, tol=tol, history=tuple(history))
