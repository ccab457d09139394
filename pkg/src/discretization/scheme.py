"""
Monotone upwind finite-difference discretization of a controlled operator.

For each control k the assembled matrix L_k acts on the unknowns with the
Dirichlet value folded in:

    central second differences  a_i (u_{j+1} - 2u_j + u_{j-1}) / h_i²
    upwind first differences    b_i⁺ (u_{j+1} - u_j)/h_i + b_i⁻ (u_j - u_{j-1})/h_i
    zeroth order                c u_j

so every off-diagonal entry is nonnegative. The discrete operator is
F_h[u] = max_k (L_k u - f~_k) with the normalized sources f~_k = f_k - min f.
"""

from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np
import scipy.sparse as sp
from loguru import logger

from src.discretization.field import Field
from src.discretization.grid import Grid
from src.errors import DiscretizationError, GridError
from src.operators.controlled import ControlledOperator, normalize_inhomogeneity

STRUCTURE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteHJB:
    """
    Per-control sparse matrices and normalized sources on one grid.

    Attributes:
        grid: Grid of the unknowns.
        matrices: One CSR matrix per control.
        sources: ``(K, N)`` normalized sources, nonnegative with nodewise minimum 0.
        fold: ``(N,)`` folded term min_k f_k at the nodes.
        lambda_min, lambda_max, gamma, delta, a0: Structure constants of the operator.
        name: Operator label.
    """

    grid: Grid
    matrices: Tuple[sp.csr_matrix, ...]
    sources: np.ndarray
    fold: np.ndarray
    lambda_min: float
    lambda_max: float
    gamma: float
    delta: float
    a0: float
    name: str = "operator"

    @property
    def n_controls(self) -> int:
        return len(self.matrices)

    @property
    def is_homogeneous(self) -> bool:
        return not np.any(self.sources)

    def homogeneous(self) -> "DiscreteHJB":
        """Discretization of F∞: same matrices, no sources."""
        if self.is_homogeneous and self.a0 == 0.0:
            return self
        return replace(self, sources=np.zeros_like(self.sources), fold=np.zeros_like(self.fold),
                       a0=0.0, name=f"{self.name}_inf")

    def control_values(self, u: np.ndarray) -> np.ndarray:
        """``(K, N)`` array of L_k u - f~_k."""
        return np.stack([L @ u for L in self.matrices]) - self.sources

    def policy(self, u: np.ndarray) -> np.ndarray:
        """Argmax control per node; the lowest index wins ties."""
        return np.argmax(self.control_values(u), axis=0)

    def frozen(self, policy: np.ndarray) -> Tuple[sp.csr_matrix, np.ndarray]:
        """Linear operator L_π and source f~_π of a fixed policy."""
        if self.n_controls == 1:
            return self.matrices[0], self.sources[0]
        L = sp.csr_matrix(self.matrices[0].shape)
        for k, Lk in enumerate(self.matrices):
            mask = policy == k
            if mask.any():
                L = L + sp.diags(mask.astype(float)) @ Lk
        source = self.sources[policy, np.arange(policy.size)]
        return L.tocsr(), source

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        return self.control_values(u).max(axis=0)


def _check_grid(d: DiscreteHJB, u: Field) -> None:
    if not d.grid.matches(u.grid):
        raise GridError("Field and discretization live on different grids")


def _assemble(grid: Grid, diag_A: np.ndarray, b: np.ndarray, c: np.ndarray) -> sp.csr_matrix:
    N = grid.size
    rows, cols, vals = [np.arange(N)], [np.arange(N)], [c.copy()]

    for axis, h in enumerate(grid.h):
        a = diag_A[:, axis]
        bp = np.maximum(b[:, axis], 0.0)
        bm = np.minimum(b[:, axis], 0.0)
        forward = grid.neighbors(axis, +1)
        backward = grid.neighbors(axis, -1)

        rows.append(np.arange(N))
        cols.append(np.arange(N))
        vals.append(-2.0 * a / h**2 - bp / h + bm / h)

        for nbr, weight in ((forward, a / h**2 + bp / h), (backward, a / h**2 - bm / h)):
            keep = nbr >= 0
            rows.append(np.flatnonzero(keep))
            cols.append(nbr[keep])
            vals.append(weight[keep])

    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    ).tocsr()


def discretize(op: ControlledOperator, grid: Grid) -> DiscreteHJB:
    """Assembles the monotone scheme of every control of ``op`` on ``grid``."""
    if op.dim != grid.dim:
        raise DiscretizationError(f"Operator '{op.name}' is {op.dim}D, grid is {grid.dim}D")

    pts = grid.coordinates
    if not op.contains(pts).all():
        raise DiscretizationError(f"Grid nodes leave the domain of '{op.name}'")

    normalized, fold = normalize_inhomogeneity(op)
    matrices, sources = [], []
    for k, control in enumerate(normalized.controls):
        if grid.dim > 1 and not control.is_diagonal:
            raise DiscretizationError(
                f"Control {k} of '{op.name}' has off-diagonal diffusion; only diagonal A is supported in 2D"
            )
        A, b, c, f = control.evaluate(pts)
        diag = np.stack([A[:, i, i] for i in range(grid.dim)], axis=1)

        bad = np.flatnonzero(np.any((diag < op.lambda_min - STRUCTURE_TOL)
                                    | (diag > op.lambda_max + STRUCTURE_TOL), axis=1))
        if bad.size:
            j = bad[0]
            raise DiscretizationError(
                f"Ellipticity violated by control {k} at x={pts[j].tolist()}: diag(A)={diag[j].tolist()}"
            )
        if np.any(np.linalg.norm(b, axis=1) > op.gamma + STRUCTURE_TOL):
            raise DiscretizationError(f"Drift of control {k} exceeds gamma={op.gamma}")
        if np.any(np.abs(c) > op.delta + STRUCTURE_TOL):
            raise DiscretizationError(f"Zeroth-order term of control {k} exceeds delta={op.delta}")

        matrices.append(_assemble(grid, diag, b, c))
        sources.append(f)

    d = DiscreteHJB(
        grid=grid,
        matrices=tuple(matrices),
        sources=np.stack(sources),
        fold=fold(pts),
        lambda_min=op.lambda_min,
        lambda_max=op.lambda_max,
        gamma=op.gamma,
        delta=op.delta,
        a0=op.a0,
        name=op.name,
    )
    logger.debug("Discretized '{}' with {} controls on {}", op.name, d.n_controls, grid.describe())
    return d


def apply_Fh(d: DiscreteHJB, u: Field) -> Field:
    _check_grid(d, u)
    return Field(d.grid, d.evaluate(u.values))


def comparison_probe(d: DiscreteHJB, samples: int = 200, seed: int = 0) -> Dict[str, float]:
    """
    Randomized checks of the discrete comparison principle and of monotonicity.

    comparison: for a nonnegative field with a strict interior maximum at node j,
        ((L_k - δ'I) v)_j <= 0 for every control k and δ' = δ + 1/2.
    monotonicity: u <= v with u_j = v_j implies F_h[u]_j <= F_h[v]_j.

    Returns the largest violation of each (positive means violated).
    """
    rng = np.random.default_rng(seed)
    N = d.grid.size
    shift = d.delta + 0.5
    comparison, monotone = 0.0, 0.0

    for _ in range(samples):
        j = int(rng.integers(N))
        v = rng.random(N)
        v[j] = v.max() + 1.0
        for L in d.matrices:
            comparison = max(comparison, float((L @ v)[j] - shift * v[j]))

        u = rng.normal(size=N)
        w = u + rng.random(N)
        w[j] = u[j]
        gap = d.evaluate(u)[j] - d.evaluate(w)[j]
        monotone = max(monotone, float(gap))

    return {"comparison": max(comparison, 0.0), "monotonicity": max(monotone, 0.0)}
