"""
Explicit sub- and supersolutions of F_h[u] = h + tφ.

Subsolution: v <= 0 solving F∞_h[v] = M + h⁺ with
    M = a0 + max_{t in I} |t|·‖φ‖∞ + δ·C1 + margin,
where C1 bounds every solution for t in I.

Supersolution: v̄ >= 0 solving the discrete M⁺(D²v̄) + γ|Dv̄| = -h⁻.
"""

from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.discretization.field import Field
from src.discretization.grid import distance_field
from src.discretization.scheme import DiscreteHJB, apply_Fh, discretize
from src.errors import PreconditionError, SolverError, SupersolutionError
from src.operators.controlled import pucci_operator
from src.solvers.howard import solve_proper
from src.solvers.perron import perron_iterate
from src.solvers.report import DEFAULT_TOL, HOWARD_CAP, PERRON_CAP

POSITIVITY_FLOOR = 1e-12


def pucci_scheme(d: DiscreteHJB) -> DiscreteHJB:
    """Discrete M⁺ + γ|D·| with the structure constants of ``d`` on the same grid."""
    op = pucci_operator(d.lambda_min, d.lambda_max, d.gamma, d.grid.dim)
    return discretize(op, d.grid)


def build_subsolution(d: DiscreteHJB, h: Field, phi: Field, t_interval: Sequence[float],
                      margin: float, bound: float, shift: Optional[float] = None,
                      tol: float = DEFAULT_TOL, cap: int = PERRON_CAP,
                      howard_cap: int = HOWARD_CAP) -> Field:
    """
    Constructs a negative subsolution valid for every t in ``t_interval``.

    Args:
        d: Discretized operator F_h.
        h: Inhomogeneity.
        phi: Principal eigenfunction used in the family h + tφ.
        t_interval: (t_lo, t_hi); a single value is allowed.
        margin: Strictly positive slack added to M.
        bound: A-priori bound C1 on the sup-norm of solutions over the interval.
        shift: Properness shift for the inner iteration.
        howard_cap: Policy-iteration cap of every proper solve.
    """
    if margin <= 0.0:
        raise PreconditionError(f"margin must be positive, got {margin}")
    ts = [float(t) for t in np.atleast_1d(t_interval)]
    t_lo, t_hi = min(ts), max(ts)

    level = d.a0 + max(abs(t_lo), abs(t_hi)) * phi.sup_norm() + d.delta * bound + margin
    rhs = h.positive_part + level

    report = perron_iterate(d.homogeneous(), rhs, Field.zeros(d.grid), shift=shift,
                            cap=cap, tol=tol, from_above=True, howard_cap=howard_cap)
    if not report.converged:
        raise SolverError(f"Subsolution solve ended with status {report.status.value}")
    v = report.solution
    if v.max() >= 0.0:
        raise SolverError(f"Subsolution is not negative (max {v.max():.3e})")

    Fv = apply_Fh(d, v)
    slack = min((Fv - h - t * phi).min() for t in (t_lo, t_hi))
    if slack < margin - 10 * tol:
        raise SolverError(f"Subsolution check failed: slack {slack:.3e} < margin {margin:.3e}")
    logger.debug("Subsolution for t in [{}, {}]: level={:.4f} slack={:.4e}", t_lo, t_hi, level, slack)
    return v


def build_supersolution(d: DiscreteHJB, h: Field, phi: Field, t: float,
                        tol: float = DEFAULT_TOL, t0: Optional[float] = None,
                        howard_cap: int = HOWARD_CAP) -> Field:
    """
    Constructs v̄ >= 0 with F_h[v̄] <= h + tφ.

    With ``t0`` given the precondition t > t0·‖h⁻‖∞ is checked before the
    Pucci solve; without it only the a-posteriori check runs.

    Raises:
        PreconditionError: t <= t0·‖h⁻‖∞.
        SupersolutionError: the a-posteriori check fails; ``t_min`` carries the
            smallest t for which this v̄ would pass.
    """
    deficit = h.negative_part
    if t0 is None:
        logger.debug("Supersolution at t={}: threshold not supplied, relying on the a-posteriori check", t)
    elif t <= t0 * deficit.sup_norm():
        raise PreconditionError(
            f"Supersolution needs t > T0·|h⁻| = {t0 * deficit.sup_norm():.6f}, got t={t}"
        )
    if deficit.sup_norm() == 0.0:
        vbar = Field.zeros(d.grid)
    else:
        vbar = solve_proper(pucci_scheme(d), -deficit, shift=0.0, tol=tol, cap=howard_cap).solution

    Fv = apply_Fh(d, vbar)
    excess = Fv - h - t * phi
    if excess.max() > tol:
        mask = phi.values > POSITIVITY_FLOOR
        t_min = float(np.max((Fv.values[mask] - h.values[mask]) / phi.values[mask]))
        raise SupersolutionError(
            f"Supersolution check failed at t={t} (excess {excess.max():.3e}); needs t >= {t_min:.6f}",
            t_min=t_min,
        )
    return vbar


def supersolution_threshold(vbar: Field, phi: Field, delta: float) -> Tuple[float, float, float]:
    """
    Constants of the supersolution chain: (C1, c0, T0).

    C1 = sup v̄/d, c0 = inf φ/d and T0 = δ·C1/c0, so that any t > T0 makes
    v̄ a supersolution.
    """
    d = distance_field(vbar.grid).values
    C1 = float(np.max(vbar.values / d))
    c0 = float(np.min(phi.values / d))
    if c0 <= 0.0:
        raise SolverError("Eigenfunction is not positive; the threshold is undefined")
    return C1, c0, delta * C1 / c0


def pucci_constant(vbar: Field, h: Field, p: float = np.inf) -> float:
    """Measured ‖v̄‖∞ / ‖h⁻‖_p of the Pucci problem (0 when h >= 0)."""
    norm = h.negative_part.lp_norm(p)
    return vbar.sup_norm() / norm if norm > 0.0 else 0.0
