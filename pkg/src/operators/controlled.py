"""
Hamilton-Jacobi-Bellman operators as finite suprema of linear elliptic operators.

    F(M, p, u, x) = max_k [ tr(A_k M) + b_k·p + c_k u - f_k ] + min_k f_k

The trailing ``min_k f_k`` enforces F(0, 0, 0, x) = 0. Dropping every source
gives the positively homogeneous asymptotic operator F∞.
"""

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from src.errors import DimensionError, OperatorError
from src.operators.coefficients import (
    CoefficientField,
    LinearCoefficients,
    MinShiftedField,
    ZERO,
)


class Sign(str, Enum):
    PLUS = "+"
    MINUS = "-"

    @property
    def factor(self) -> float:
        return 1.0 if self is Sign.PLUS else -1.0

    @classmethod
    def parse(cls, value) -> "Sign":
        if isinstance(value, Sign):
            return value
        text = str(value).strip().lower()
        if text in ("+", "plus", "positive", "1", "+1"):
            return cls.PLUS
        if text in ("-", "minus", "negative", "-1"):
            return cls.MINUS
        raise OperatorError(f"Unknown sign '{value}'")


@dataclass(frozen=True, eq=False)
class PointState:
    """A point (M, p, u, x) of the operator's argument space."""

    M: np.ndarray
    p: np.ndarray
    u: float
    x: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise DimensionError(f"Hessian value must be square, got {M.shape}")
        if not (M.shape[0] == p.size == x.size):
            raise DimensionError(
                f"Inconsistent state dimensions: M {M.shape}, p {p.size}, x {x.size}"
            )
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "x", x)

    @property
    def dim(self) -> int:
        return self.p.size


@dataclass(frozen=True)
class ControlledOperator:
    """
    Finite family of linear elliptic operators plus their structure constants.

    Attributes:
        controls: Ordered controls; ties in argmax selection go to the lowest index.
        lambda_min, lambda_max: Ellipticity constants of every diffusion matrix.
        gamma: Bound on |b_k|.
        delta: Bound on |c_k|.
        a0: Inhomogeneity bound, at least 2 max_k sup|f_k|. Computed when omitted.
        domain: Optional per-axis box on which coefficients are defined.
        name: Label used in logs and outputs.
    """

    controls: Tuple[LinearCoefficients, ...]
    lambda_min: float
    lambda_max: float
    gamma: float = 0.0
    delta: float = 0.0
    a0: Optional[float] = None
    domain: Optional[Tuple[Tuple[float, float], ...]] = None
    name: str = "custom"

    def __post_init__(self):
        controls = tuple(self.controls)
        object.__setattr__(self, "controls", controls)
        if not controls:
            raise OperatorError("An operator needs at least one control")
        if len({c.dim for c in controls}) != 1:
            raise DimensionError("All controls must share the spatial dimension")
        if not (0.0 < self.lambda_min <= self.lambda_max):
            raise OperatorError(
                f"Ellipticity constants must satisfy 0 < lambda <= Lambda, got "
                f"({self.lambda_min}, {self.lambda_max})"
            )
        if self.gamma < 0.0 or self.delta < 0.0:
            raise OperatorError("gamma and delta must be nonnegative")

        if self.domain is not None:
            box = tuple((float(lo), float(hi)) for lo, hi in self.domain)
            if len(box) != self.dim or any(lo >= hi for lo, hi in box):
                raise OperatorError(f"Invalid operator domain {self.domain}")
            object.__setattr__(self, "domain", box)

        required = self._source_bound()
        if self.a0 is None:
            if required is None:
                raise OperatorError(
                    f"Operator '{self.name}': a0 must be declared for non-constant "
                    f"sources without a domain"
                )
            object.__setattr__(self, "a0", required)
        elif required is not None and self.a0 < required - 1e-12:
            raise OperatorError(f"a0={self.a0} is below 2 sup|f| = {required}")

    def _source_bound(self) -> Optional[float]:
        sups = []
        for control in self.controls:
            f = control.f
            if f.is_zero:
                sups.append(0.0)
            elif f.is_table:
                sups.append(float(np.abs(f.table_values).max()))
            elif f.is_constant:
                sups.append(float(abs(f.evaluate(np.zeros((1, self.dim)))[0])))
            elif self.domain is not None:
                sups.append(float(np.abs(f.evaluate(self.sample_points(4096))).max()))
            else:
                return None
        return 2.0 * max(sups)

    @property
    def dim(self) -> int:
        return self.controls[0].dim

    @property
    def is_homogeneous(self) -> bool:
        return all(c.f.is_zero for c in self.controls)

    @cached_property
    def normalized(self) -> "ControlledOperator":
        return normalize_inhomogeneity(self)[0]

    def sample_points(self, n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Points spread over the domain box ([-1, 1]^dim when none is declared)."""
        box = self.domain or tuple((-1.0, 1.0) for _ in range(self.dim))
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        if rng is None:
            per_axis = max(2, int(round(n ** (1.0 / self.dim))))
            axes = [np.linspace(l, h, per_axis) for l, h in zip(lo, hi)]
            return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        return lo + (hi - lo) * rng.random((n, self.dim))

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.domain is None:
            return np.ones(points.shape[0], dtype=bool)
        lo = np.array([b[0] for b in self.domain])
        hi = np.array([b[1] for b in self.domain])
        return np.all((points >= lo) & (points <= hi), axis=1)


def normalize_inhomogeneity(op: ControlledOperator) -> Tuple[ControlledOperator, Callable[[np.ndarray], np.ndarray]]:
    """
    Moves min_k f_k out of the sources.

    Returns the operator with sources ``f_k - min_j f_j`` (so the normalized
    operator is simply ``max_k(L_k - f~_k)``) and the folded term as a function
    of the points.
    """
    pool = tuple(c.f for c in op.controls)

    def fold(points: np.ndarray) -> np.ndarray:
        return np.min([f.evaluate(points) for f in pool], axis=0)

    if all(f.is_constant and not f.is_table for f in pool):
        floor = min(float(f.evaluate(np.zeros((1, op.dim)))[0]) for f in pool)
        shifted = [CoefficientField.of(float(f.evaluate(np.zeros((1, op.dim)))[0]) - floor) for f in pool]
    else:
        shifted = [MinShiftedField(base=f, pool=pool, label=f"{f.label}-min") for f in pool]

    controls = tuple(c.with_source(s) for c, s in zip(op.controls, shifted))
    return replace(op, controls=controls), fold


def _control_terms(op: ControlledOperator, M: np.ndarray, p: np.ndarray, u: np.ndarray,
                   x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Linear parts ``(K, n)`` and sources ``(K, n)`` of every control."""
    K, n = len(op.controls), x.shape[0]
    linear = np.empty((K, n))
    sources = np.empty((K, n))
    for k, control in enumerate(op.controls):
        A, b, c, f = control.evaluate(x)
        linear[k] = np.einsum("nij,nij->n", A, M) + np.einsum("ni,ni->n", b, p) + c * u
        sources[k] = f
    return linear, sources


def evaluate_states(op: ControlledOperator, M: np.ndarray, p: np.ndarray, u: np.ndarray,
                    x: np.ndarray) -> np.ndarray:
    """Vectorized normalized F over ``n`` states: M (n,d,d), p (n,d), u (n,), x (n,d)."""
    linear, sources = _control_terms(op.normalized, M, p, u, x)
    return np.max(linear - sources, axis=0)


def eval_F(op: ControlledOperator, s: PointState) -> float:
    if s.dim != op.dim:
        raise DimensionError(f"State is {s.dim}D, operator '{op.name}' is {op.dim}D")
    x = s.x[None, :]
    if not op.contains(x)[0]:
        raise OperatorError(f"x={s.x.tolist()} lies outside the domain of '{op.name}'")
    return float(evaluate_states(op, s.M[None], s.p[None], np.array([s.u]), x)[0])


def asymptotic_operator(op: ControlledOperator) -> ControlledOperator:
    """F∞: every source set to zero and a0 = 0."""
    if op.is_homogeneous and op.a0 == 0.0:
        return op
    controls = tuple(c.with_source(ZERO) for c in op.controls)
    return replace(op, controls=controls, a0=0.0, name=f"{op.name}_inf")


def pucci_extremal(lambda_min: float, lambda_max: float, sign, M: np.ndarray) -> float:
    """
    Pucci extremal operator M±(M).

    M+ weights positive eigenvalues with Lambda and negative ones with lambda;
    M- swaps the weights.
    """
    if not (0.0 < lambda_min <= lambda_max):
        raise OperatorError("Pucci constants must satisfy 0 < lambda <= Lambda")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, rtol=0.0, atol=1e-12):
        raise OperatorError("Pucci operators need a symmetric matrix")
    try:
        eig = np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as e:
        raise OperatorError(f"Eigen-decomposition failed: {e}") from e

    pos, neg = eig[eig > 0].sum(), eig[eig < 0].sum()
    if Sign.parse(sign) is Sign.PLUS:
        return float(lambda_max * pos + lambda_min * neg)
    return float(lambda_min * pos + lambda_max * neg)


def fucik_operator(a: float, b: float, dim: int = 1) -> ControlledOperator:
    """Tr(M) - a u⁻ + b u⁺ as the maximum of Tr(M) + a u and Tr(M) + b u."""
    if a > b:
        raise OperatorError(f"Fucik operator needs a <= b, got a={a}, b={b}")
    slopes = [a] if a == b else [a, b]
    controls = tuple(LinearCoefficients.build(A=1.0, c=s, dim=dim) for s in slopes)
    return ControlledOperator(controls=controls, lambda_min=1.0, lambda_max=1.0,
                              gamma=0.0, delta=max(abs(a), abs(b)), a0=0.0, name="fucik")


def laplacian_operator(dim: int = 1, c: float = 0.0) -> ControlledOperator:
    control = LinearCoefficients.build(A=1.0, c=c, dim=dim)
    return ControlledOperator(controls=(control,), lambda_min=1.0, lambda_max=1.0,
                              gamma=0.0, delta=abs(c), a0=0.0, name="laplacian")


def pucci_operator(lambda_min: float, lambda_max: float, gamma: float = 0.0,
                   dim: int = 1) -> ControlledOperator:
    """
    M+(D²u) + gamma|Du| with diagonal diffusion controls {lambda, Lambda}^dim and
    drift controls {-gamma, 0, gamma}^dim.

    Exact on the diagonal Hessians and axis-wise upwind gradients a box-grid
    scheme produces.
    """
    diagonals = sorted(set(itertools.product((lambda_min, lambda_max), repeat=dim)))
    drifts = [(0.0,) * dim] if gamma == 0.0 else list(itertools.product((-gamma, 0.0, gamma), repeat=dim))

    controls = []
    for diag in diagonals:
        A = [[diag[i] if i == j else 0.0 for j in range(dim)] for i in range(dim)]
        for b in drifts:
            controls.append(LinearCoefficients.build(A=A, b=list(b), dim=dim))
    # per-axis drift controls reach |b| = gamma·sqrt(dim)
    return ControlledOperator(controls=tuple(controls), lambda_min=lambda_min,
                              lambda_max=lambda_max, gamma=gamma * np.sqrt(dim), delta=0.0, a0=0.0,
                              name="pucci")


def plateau_operator(a: float, b: float, slope: float, level: float) -> ControlledOperator:
    """
    Semilinear u'' + f(u) with f(u) = max(a u, slope u, b u - (b - slope) level).

    With ``slope`` the principal Dirichlet eigenvalue, every k·φ with k in
    [0, level] solves the homogeneous problem.
    """
    if not (a <= slope <= b):
        raise OperatorError(f"Plateau slope must lie in [a, b], got {slope}")
    if level <= 0.0:
        raise OperatorError("Plateau level must be positive")
    controls = (
        LinearCoefficients.build(A=1.0, c=a),
        LinearCoefficients.build(A=1.0, c=slope),
        LinearCoefficients.build(A=1.0, c=b, f=(b - slope) * level),
    )
    return ControlledOperator(controls=controls, lambda_min=1.0, lambda_max=1.0, gamma=0.0,
                              delta=max(abs(a), abs(b)), name="plateau")


def operator_from_controls(controls: Sequence[dict], dim: int, lambda_min: float,
                           lambda_max: float, gamma: float, delta: float,
                           a0: Optional[float] = None,
                           domain: Optional[Tuple[Tuple[float, float], ...]] = None,
                           name: str = "custom") -> ControlledOperator:
    """Builds an operator from ``{"A": ..., "b": ..., "c": ..., "f": ...}`` entries."""
    built = tuple(
        LinearCoefficients.build(A=entry.get("A", 1.0), b=entry.get("b"),
                                 c=entry.get("c", 0.0), f=entry.get("f", 0.0), dim=dim)
        for entry in controls
    )
    return ControlledOperator(controls=built, lambda_min=lambda_min, lambda_max=lambda_max,
                              gamma=gamma, delta=delta, a0=a0, domain=domain, name=name)
