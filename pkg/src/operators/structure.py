"""Sampling-based checks of the structural hypotheses of an HJB operator."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from loguru import logger

from src.errors import OperatorError
from src.operators.coefficients import coefficient_violations
from src.operators.controlled import (
    ControlledOperator,
    asymptotic_operator,
    evaluate_states,
    pucci_extremal,
)

HOMOGENEITY_FACTORS = (0.5, 2.0, 10.0)
CONVEX_WEIGHTS = (0.25, 0.5, 0.75)
SCALE_LADDER = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
DYADIC_TOP = 2.0 ** 16


@dataclass(frozen=True)
class StructureReport:
    """Largest observed violation of each structural property (0 means none seen)."""

    operator: str
    samples: int
    seed: int
    violations: Dict[str, float] = field(default_factory=dict)

    def failed(self, tol: float = 1e-12) -> List[str]:
        return [name for name, value in self.violations.items() if value > tol]

    def passed(self, tol: float = 1e-12) -> bool:
        return not self.failed(tol)


@dataclass(frozen=True)
class _States:
    M: np.ndarray
    p: np.ndarray
    u: np.ndarray
    x: np.ndarray

    def __add__(self, other: "_States") -> "_States":
        return _States(self.M + other.M, self.p + other.p, self.u + other.u, self.x)

    def scaled(self, t: float) -> "_States":
        return _States(t * self.M, t * self.p, t * self.u, self.x)

    def combine(self, other: "_States", alpha: float) -> "_States":
        return _States(alpha * self.M + (1 - alpha) * other.M,
                       alpha * self.p + (1 - alpha) * other.p,
                       alpha * self.u + (1 - alpha) * other.u, self.x)


def _random_states(op: ControlledOperator, n: int, rng: np.random.Generator,
                   x: Optional[np.ndarray] = None) -> _States:
    dim = op.dim
    G = rng.normal(size=(n, dim, dim))
    M = 0.5 * (G + np.transpose(G, (0, 2, 1)))
    p = rng.normal(size=(n, dim))
    u = rng.normal(size=n)
    if x is None:
        x = op.sample_points(n, rng)
    return _States(M, p, u, x)


def _partner_states(op: ControlledOperator, base: _States, rng: np.random.Generator) -> _States:
    """
    Second state of each pair, sharing x with ``base``.

    A quarter of the pairs differ in every argument; the rest differ only in
    M, only in p, or only in u, which isolates each term of the sandwich.
    """
    fresh = _random_states(op, base.u.size, rng, x=base.x)
    flavor = np.arange(base.u.size) % 4
    M = np.where((flavor == 0) | (flavor == 1), 1, 0)[:, None, None]
    P = np.where((flavor == 0) | (flavor == 2), 1, 0)[:, None]
    U = np.where((flavor == 0) | (flavor == 3), 1, 0)
    return _States(
        M=np.where(M, fresh.M, base.M),
        p=np.where(P, fresh.p, base.p),
        u=np.where(U, fresh.u, base.u),
        x=base.x,
    )


def _F(op: ControlledOperator, s: _States) -> np.ndarray:
    return evaluate_states(op, s.M, s.p, s.u, s.x)


def _pucci_batch(lambda_min: float, lambda_max: float, M: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvalsh(M)
    pos = np.where(eig > 0, eig, 0.0).sum(axis=1)
    neg = np.where(eig < 0, eig, 0.0).sum(axis=1)
    return lambda_max * pos + lambda_min * neg


def check_structure(op: ControlledOperator, samples: int, seed: int = 0) -> StructureReport:
    """
    Checks the structure hypotheses on ``samples`` random state pairs.

    Properties (violation names in the report):
        sandwich: L-(Δ) <= F(s1) - F(s2) <= L+(Δ) with the declared constants.
        convexity: F(a s1 + (1-a) s2) <= a F(s1) + (1-a) F(s2).
        homogeneity: F∞(t s) = t F∞(s).
        asymptotic_difference: F(s1 + s2) - F(s1) <= F∞(s2).
        uniform_approximation: F∞ - a0 <= F <= F∞.
        scaling_monotonicity: t -> F(t s)/t nondecreasing.
        dyadic_limit: sup over t = 1..2^16 of F(t s)/t within a0/2^16 of F∞(s).
        pucci_duality: M+(M) = -M-(-M).
        coefficients: sampled coefficients within (lambda, Lambda, gamma, delta, a0/2).
    """
    if samples < 1:
        raise OperatorError("samples must be at least 1")

    rng = np.random.default_rng(seed)
    op_inf = asymptotic_operator(op)
    s1 = _random_states(op, samples, rng)
    s2 = _partner_states(op, s1, rng)
    F1, F2 = _F(op, s1), _F(op, s2)
    v: Dict[str, float] = {}

    dM, dp, du = s1.M - s2.M, s1.p - s2.p, s1.u - s2.u
    pucci_plus = _pucci_batch(op.lambda_min, op.lambda_max, dM)
    pucci_minus = -_pucci_batch(op.lambda_min, op.lambda_max, -dM)
    grad = op.gamma * np.linalg.norm(dp, axis=1)
    zeroth = op.delta * np.abs(du)
    diff = F1 - F2
    upper = diff - (pucci_plus + grad + zeroth)
    lower = (pucci_minus - grad - zeroth) - diff
    v["sandwich"] = float(max(0.0, upper.max(), lower.max()))

    convexity = [
        _F(op, s1.combine(s2, a)) - (a * F1 + (1 - a) * F2) for a in CONVEX_WEIGHTS
    ]
    v["convexity"] = float(max(0.0, max(c.max() for c in convexity)))

    Finf1 = _F(op_inf, s1)
    v["homogeneity"] = float(max(
        np.abs(_F(op_inf, s1.scaled(t)) - t * Finf1).max() for t in HOMOGENEITY_FACTORS
    ))

    Finf2 = _F(op_inf, s2)
    v["asymptotic_difference"] = float(max(0.0, (_F(op, s1 + s2) - F1 - Finf2).max()))

    v["uniform_approximation"] = float(max(0.0, (F1 - Finf1).max(), (Finf1 - op.a0 - F1).max()))

    ratios = np.stack([_F(op, s1.scaled(t)) / t for t in SCALE_LADDER])
    v["scaling_monotonicity"] = float(max(0.0, (ratios[:-1] - ratios[1:]).max()))

    ladder = [2.0 ** k for k in range(17)]
    best = np.max(np.stack([_F(op, s1.scaled(t)) / t for t in ladder]), axis=0)
    v["dyadic_limit"] = float(max(0.0, (np.abs(best - Finf1) - op.a0 / DYADIC_TOP).max()))

    duality = [
        abs(pucci_extremal(op.lambda_min, op.lambda_max, "+", M)
            + pucci_extremal(op.lambda_min, op.lambda_max, "-", -M))
        for M in dM[: min(samples, 100)]
    ]
    v["pucci_duality"] = float(max(duality))

    coefficient = 0.0
    for control in op.controls:
        bounds = coefficient_violations(control, s1.x, op.lambda_min, op.lambda_max,
                                        op.gamma, op.delta)
        coefficient = max(coefficient, *bounds.values())
        f = control.f.evaluate(s1.x)
        coefficient = max(coefficient, float(np.abs(f).max() - 0.5 * op.a0))
    v["coefficients"] = coefficient

    report = StructureReport(operator=op.name, samples=samples, seed=seed, violations=v)
    failed = report.failed()
    if failed:
        logger.warning("Structure check of '{}' flagged: {}", op.name, ", ".join(failed))
    else:
        logger.info("Structure check of '{}' passed on {} samples", op.name, samples)
    return report
