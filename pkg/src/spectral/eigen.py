"""
Principal half-eigenvalues of positively homogeneous discrete HJB operators.

Nonlinear inverse power iteration: with σ < λ₁, solve

    F_h[w] + σ w = -v_k,   v_{k+1} = w / ‖w‖∞

and bracket the eigenvalue by the Collatz-Wielandt ratios -F_h[v]/v.
Positive iterates give λ₁⁺, negative iterates λ₁⁻.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from src.discretization.field import Field
from src.discretization.grid import Grid, HoleSpec, distance_field, restrict_domain
from src.discretization.scheme import DiscreteHJB, discretize
from src.errors import InvariantViolation, SpectralError
from src.operators.controlled import ControlledOperator, Sign
from src.solvers.howard import solve_proper
from src.solvers.report import HOWARD_CAP

DEFAULT_EIGEN_TOL = 1e-10
DEFAULT_EIGEN_CAP = 2000
RATIO_FLOOR = 1e-8
MAX_RESTARTS = 8


@dataclass(frozen=True)
class EigenPair:
    """
    Principal half-eigenpair with its Collatz-Wielandt bracket.

    Attributes:
        value: Bracket midpoint.
        phi: Eigenfunction, sign·phi > 0 and ‖phi‖∞ = 1.
        sign: PLUS for λ₁⁺, MINUS for λ₁⁻.
        bracket: (λ_min, λ_max).
        iterations: Inverse iterations performed.
        residual: ‖F_h[phi] + value·phi‖∞.
        hopf: Measured (c0, C0) with c0·d <= |phi| <= C0·d.
        tol: Requested accuracy; bounds both the bracket width and the residual.
    """

    value: float
    phi: Field
    sign: Sign
    bracket: Tuple[float, float]
    iterations: int
    residual: float
    hopf: Tuple[float, float]
    tol: float = DEFAULT_EIGEN_TOL

    def __post_init__(self):
        if np.any(self.sign.factor * self.phi.values <= 0.0):
            raise InvariantViolation("eigen_sign", f"phi is not one-signed for sign {self.sign.value}")
        if not self.bracket[0] <= self.value <= self.bracket[1]:
            raise InvariantViolation("eigen_bracket", f"{self.value} outside {self.bracket}")
        if self.width > self.tol:
            raise InvariantViolation("eigen_width", f"bracket width {self.width:.3e} > {self.tol}")
        if self.residual > self.tol:
            raise InvariantViolation("eigen_residual", f"residual {self.residual:.3e} > {self.tol}")

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def to_summary(self) -> dict:
        return {
            "sign": self.sign.value,
            "lambda": self.value,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "residual": self.residual,
            "hopf_c0": self.hopf[0],
            "hopf_C0": self.hopf[1],
        }


def hopf_ratio(phi: Field, d: Field) -> Tuple[float, float]:
    """(inf, sup) of |phi|/d over the unknowns."""
    if not (np.all(phi.values > 0.0) or np.all(phi.values < 0.0)):
        raise SpectralError("hopf_ratio needs a one-signed field")
    ratio = np.abs(phi.values) / d.values
    return float(ratio.min()), float(ratio.max())


def collatz_wielandt(d: DiscreteHJB, v: np.ndarray, ratio_floor: float = RATIO_FLOOR) -> Tuple[float, float]:
    """min/max of -F_h[v]/v over nodes where |v| > ratio_floor·‖v‖∞."""
    Fv = d.evaluate(v)
    mask = np.abs(v) > ratio_floor * np.abs(v).max()
    ratios = -Fv[mask] / v[mask]
    return float(ratios.min()), float(ratios.max())


def principal_half_eigen(d: DiscreteHJB, sign, tol: float = DEFAULT_EIGEN_TOL,
                         cap: int = DEFAULT_EIGEN_CAP, ratio_floor: float = RATIO_FLOOR,
                         start: Optional[Field] = None, shift: Optional[float] = None,
                         howard_cap: int = HOWARD_CAP) -> EigenPair:
    """
    Computes λ₁⁺ (sign "+") or λ₁⁻ (sign "-") of the homogeneous operator ``d``.

    The iteration starts from sign·(distance to the boundary) unless ``start``
    is given, with σ = -δ - 1. A sign change lowers σ and restarts.
    """
    if not d.is_homogeneous:
        raise SpectralError(f"Operator '{d.name}' has sources; eigenvalues need F∞")
    if tol <= 0.0:
        raise SpectralError("tol must be positive")
    sign = Sign.parse(sign)
    s = sign.factor
    sigma = -d.delta - 1.0 if shift is None else float(shift)

    dist = distance_field(d.grid)
    seed = (s * dist) if start is None else start
    if np.any(s * seed.values <= 0.0):
        raise SpectralError("Start vector must have the requested sign on every node")
    first = seed.values / np.abs(seed.values).max()

    v = first
    restarts = 0
    lo, hi = -np.inf, np.inf
    for k in range(1, cap + 1):
        w = solve_proper(d, Field(d.grid, -v), shift=-sigma, cap=howard_cap).solution.values
        if np.any(s * w <= 0.0):
            restarts += 1
            if restarts > MAX_RESTARTS:
                raise SpectralError(f"Iterates keep changing sign; last shift {sigma}")
            sigma -= 1.0 + abs(sigma)
            logger.warning("Eigen iterate lost its sign; lowering shift to {:.3f}", sigma)
            v = first
            continue

        v = w / np.abs(w).max()
        lo, hi = collatz_wielandt(d, v, ratio_floor)
        if hi - lo <= tol:
            value = 0.5 * (lo + hi)
            phi = Field(d.grid, v)
            residual = float(np.abs(d.evaluate(v) + value * v).max())
            pair = EigenPair(value=value, phi=phi, sign=sign, bracket=(lo, hi), iterations=k,
                             residual=residual, hopf=hopf_ratio(phi, dist), tol=tol)
            logger.debug("lambda_1^{} of '{}' = {:.10f} after {} iterations",
                         sign.value, d.name, value, k)
            return pair

    raise SpectralError(
        f"Collatz-Wielandt bracket [{lo:.6g}, {hi:.6g}] did not shrink below {tol} in {cap} iterations"
    )


def principal_pair(d: DiscreteHJB, tol: float = DEFAULT_EIGEN_TOL, cap: int = DEFAULT_EIGEN_CAP,
                   ratio_floor: float = RATIO_FLOOR,
                   howard_cap: int = HOWARD_CAP) -> Tuple[EigenPair, EigenPair]:
    """Both half-eigenpairs, computed concurrently, with their ordering and range asserted."""
    options = dict(tol=tol, cap=cap, ratio_floor=ratio_floor, howard_cap=howard_cap)
    with ThreadPoolExecutor(max_workers=2) as pool:
        plus_job = pool.submit(principal_half_eigen, d, Sign.PLUS, **options)
        minus_job = pool.submit(principal_half_eigen, d, Sign.MINUS, **options)
        plus, minus = plus_job.result(), minus_job.result()

    if plus.value > minus.value + tol:
        raise InvariantViolation("eigen_order", f"lambda+ = {plus.value} > lambda- = {minus.value}")
    if plus.value < -d.delta - tol:
        raise InvariantViolation("eigen_lower", f"lambda+ = {plus.value} < -delta = {-d.delta}")
    radius = d.grid.inscribed_radius
    ceiling = 100.0 * d.lambda_max * d.grid.dim / radius**2
    if minus.value > ceiling:
        raise InvariantViolation("eigen_upper", f"lambda- = {minus.value} exceeds {ceiling:.3f}")
    return plus, minus


def domain_monotonicity_gap(op: ControlledOperator, grid: Grid, gamma: Optional[HoleSpec],
                            tol: float = DEFAULT_EIGEN_TOL, cap: int = DEFAULT_EIGEN_CAP,
                            ratio_floor: float = RATIO_FLOOR,
                            howard_cap: int = HOWARD_CAP) -> Tuple[float, float]:
    """λ₁⁺ of ``op`` on the grid and on the grid with Γ excised."""
    if not op.is_homogeneous:
        raise SpectralError("Domain monotonicity needs a homogeneous operator")
    options = dict(tol=tol, cap=cap, ratio_floor=ratio_floor, howard_cap=howard_cap)
    full = principal_half_eigen(discretize(op, grid), Sign.PLUS, **options)
    reduced_grid = restrict_domain(grid, gamma)
    if reduced_grid is grid:
        return full.value, full.value
    reduced = principal_half_eigen(discretize(op, reduced_grid), Sign.PLUS, **options)
    logger.info("lambda_1^+ on Omega = {:.6f}, on Omega minus Gamma = {:.6f}", full.value, reduced.value)
    return full.value, reduced.value
