"""
Lower bound for λ₁⁺ from an approximate positive supersolution.

Given w with F_h[w] <= eps, eps >= 0 and ‖w⁻‖∞ <= ‖eps‖_p (after scaling
‖w‖∞ = 1), the field z = w + e + ẽψ, with ψ the solution of the discrete
Pucci problem M⁺(D²ψ) + γ|Dψ| = -ε̃/ẽ, satisfies F_h[z] <= C1·δ·ẽ·z.
Hence λ₁⁺ >= -C1·δ·ẽ.
"""

import numpy as np
from loguru import logger

from src.discretization.field import Field
from src.discretization.scheme import DiscreteHJB, apply_Fh
from src.errors import CertificateError
from src.solvers.constructions import pucci_scheme
from src.solvers.howard import solve_proper

CHAIN_TOL = 1e-9
POSITIVITY_FLOOR = 1e-14


def eigen_lower_bound_certificate(d: DiscreteHJB, w: Field, eps: Field, p: float = np.inf,
                                  tol: float = 1e-10) -> float:
    """
    Returns a lower bound for λ₁⁺ of the homogeneous operator ``d``.

    Args:
        d: Discrete F∞.
        w: Approximate supersolution.
        eps: Nonnegative defect with F_h[w] <= eps.
        p: Exponent of the defect norm.
        tol: Slack allowed in the supersolution check.

    Raises:
        CertificateError: a hypothesis fails or the final chain check does not hold.
    """
    if not d.is_homogeneous:
        raise CertificateError("Certificates apply to the homogeneous operator")
    if eps.min() < 0.0:
        raise CertificateError(f"eps must be nonnegative (min {eps.min():.3e})")
    excess = (apply_Fh(d, w) - eps).max()
    if excess > tol:
        raise CertificateError(f"F_h[w] exceeds eps by {excess:.3e}")

    scale = w.sup_norm()
    if scale == 0.0:
        raise CertificateError("w vanishes identically")
    w1, e1 = w / scale, eps / scale
    e = e1.lp_norm(p)
    if w1.negative_part.sup_norm() > e + tol:
        raise CertificateError(
            f"Negative part of w ({w1.negative_part.sup_norm():.3e}) exceeds the defect norm ({e:.3e})"
        )

    if e == 0.0:
        logger.debug("Exact supersolution: lambda_1^+ >= 0")
        return 0.0

    w_shift = w1 + e
    eps_shift = e1 + d.delta * e
    e_shift = eps_shift.lp_norm(p)
    psi = solve_proper(pucci_scheme(d), -(eps_shift / e_shift), shift=0.0).solution

    support = w_shift.values > POSITIVITY_FLOOR
    if np.any(psi.values[~support] > POSITIVITY_FLOOR):
        raise CertificateError("Pucci corrector is positive where the shifted field vanishes")
    C1 = float(np.max(psi.values[support] / w_shift.values[support]))
    bound = -C1 * d.delta * e_shift

    z = w_shift + e_shift * psi
    chain = (apply_Fh(d, z) + bound * z).max()
    if chain > CHAIN_TOL * (1.0 + z.sup_norm()):
        raise CertificateError(f"Chain check failed: F_h[z] + bound·z reaches {chain:.3e}")

    logger.debug("Certificate: e={:.3e} e~={:.3e} C1={:.4f} bound={:.6f}", e, e_shift, C1, bound)
    return bound if bound != 0.0 else 0.0
