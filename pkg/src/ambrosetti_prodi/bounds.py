"""A-priori bounds on solutions and on the threshold t*."""

from typing import Tuple

from src.errors import PreconditionError


def _eigen_factor(lambda_plus: float, lambda_minus: float) -> float:
    if not (lambda_plus < 0.0 < lambda_minus):
        raise PreconditionError(
            f"Bounds need lambda_1^+ < 0 < lambda_1^-, got ({lambda_plus}, {lambda_minus})"
        )
    return (1.0 - 1.0 / lambda_plus) * (1.0 + 1.0 / lambda_minus)


def apriori_bound(lambda_plus: float, lambda_minus: float, a0: float, g_norm: float,
                  c_cal: float) -> float:
    """C·(1 - 1/λ₁⁺)(1 + 1/λ₁⁻)(a0 + ‖g‖): sup-norm bound for every solution of F[u] = g."""
    if c_cal <= 0.0:
        raise PreconditionError(f"Calibrated constant must be positive, got {c_cal}")
    return c_cal * _eigen_factor(lambda_plus, lambda_minus) * (a0 + g_norm)


def refined_apriori_bound(lambda_plus: float, lambda_minus: float, a0: float,
                          g_plus_norm: float, g_minus_norm: float, rho: float,
                          sigma0: float, c_cal: float) -> float:
    """
    ρ‖g⁻‖ + C ρ^(-σ0)(1 - 1/λ₁⁺)(1 + 1/λ₁⁻)(a0 + ‖g⁺‖) for ρ in (0, 1].

    The eigenvalue factor only multiplies the positive part of g.
    """
    if not (0.0 < rho <= 1.0):
        raise PreconditionError(f"rho must lie in (0, 1], got {rho}")
    if sigma0 <= 0.0:
        raise PreconditionError(f"sigma0 must be positive, got {sigma0}")
    return rho * g_minus_norm + rho ** (-sigma0) * apriori_bound(
        lambda_plus, lambda_minus, a0, g_plus_norm, c_cal
    )


def tstar_bracket(ctx) -> Tuple[float, float]:
    """
    Calibrated bracket for t*(h):

        -C0(1 - 1/λ₁⁺)(1 + 1/λ₁⁻)(a0 + ‖h‖)  <=  t*  <=  T0‖h⁻‖.

    Both ends coincide at 0 when h = 0; searches start from a widened copy.
    """
    cal = ctx.calibration
    lo = -apriori_bound(ctx.lambda_plus, ctx.lambda_minus, ctx.a0, ctx.norm(ctx.h), cal.c_cal)
    hi = cal.t0_cal * ctx.norm(ctx.h.negative_part)
    return lo, hi
