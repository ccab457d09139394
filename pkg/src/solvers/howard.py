"""Howard policy iteration for proper discrete HJB problems."""

import warnings
from typing import Optional

import numpy as np
import scipy.sparse as sp
from loguru import logger
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from src.discretization.field import Field
from src.discretization.scheme import DiscreteHJB, apply_Fh
from src.errors import PolicyCycleError, PreconditionError, SingularSystemError, SolverError
from src.solvers.report import DEFAULT_TOL, HOWARD_CAP, SolveReport, SolveStatus

TIE_TOL = 1e-12


def linear_solve(A: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Sparse direct solve; singular or non-finite results raise SingularSystemError."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            x = spsolve(sp.csc_matrix(A), rhs)
        except (MatrixRankWarning, RuntimeError) as e:
            raise SingularSystemError(f"Singular frozen system: {e}") from e
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("Frozen system produced non-finite values")
    return x


def default_shift(d: DiscreteHJB) -> float:
    return d.delta + 1.0


def check_shift(d: DiscreteHJB, shift: float) -> None:
    # c ≡ 0 schemes are M-matrices for every policy, so shift 0 is admissible there
    if shift > d.delta or (shift == 0.0 and d.delta == 0.0):
        return
    raise PreconditionError(f"shift={shift} must exceed delta={d.delta} for a proper problem")


def improve_policy(values: np.ndarray, policy: np.ndarray) -> np.ndarray:
    """Argmax policy that keeps the current control unless another is better by more than TIE_TOL."""
    best = values.max(axis=0)
    current = values[policy, np.arange(policy.size)]
    keep = current >= best - TIE_TOL * (1.0 + np.abs(best))
    return np.where(keep, policy, np.argmax(values, axis=0))


def solve_proper(d: DiscreteHJB, g: Field, shift: Optional[float] = None,
                 tol: float = DEFAULT_TOL, cap: int = HOWARD_CAP,
                 initial_policy: Optional[np.ndarray] = None) -> SolveReport:
    """
    Solves max_k(L_k u - f~_k) - shift·u = g by policy iteration.

    Each sweep freezes the argmax control per node and solves the linear
    system (L_π - shift·I) u = g + f~_π. Finite control sets make the
    iteration terminate exactly.
    """
    if not d.grid.matches(g.grid):
        raise PreconditionError("Right-hand side and discretization live on different grids")
    shift = default_shift(d) if shift is None else float(shift)
    check_shift(d, shift)

    N = d.grid.size
    eye = sp.identity(N, format="csr")
    policy = np.zeros(N, dtype=np.int64) if initial_policy is None else np.asarray(initial_policy).copy()
    seen = set()

    for it in range(1, cap + 1):
        L, source = d.frozen(policy)
        u = linear_solve(L - shift * eye, g.values + source)

        new_policy = improve_policy(d.control_values(u), policy)
        changed = int(np.count_nonzero(new_policy != policy))
        logger.debug("Howard sweep {}: {} policy changes", it, changed)

        if changed == 0:
            residual = float(np.abs(d.evaluate(u) - shift * u - g.values).max())
            accept = tol * max(1.0, g.sup_norm())
            if residual > accept:
                raise SolverError(
                    f"Policy iteration settled with residual {residual:.3e} > tol {tol:.1e}"
                )
            return SolveReport(solution=Field(d.grid, u), iterations=it,
                               final_residual=residual, status=SolveStatus.CONVERGED, tol=accept)

        key = new_policy.tobytes()
        if key in seen:
            raise PolicyCycleError(f"Policy iteration revisited a policy after {it} sweeps")
        seen.add(policy.tobytes())
        policy = new_policy

    raise SolverError(f"Policy iteration did not settle within {cap} sweeps")


def residual_norm(d: DiscreteHJB, u: Field, g: Field) -> float:
    """Sup-norm of F_h[u] - g."""
    return (apply_Fh(d, u) - g).sup_norm()
