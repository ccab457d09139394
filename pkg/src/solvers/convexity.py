from typing import Dict, Sequence

import numpy as np

from src.discretization.field import Field
from src.discretization.scheme import DiscreteHJB, apply_Fh

DEFAULT_ALPHAS = (0.25, 0.5, 0.75, -0.5, 1.5)


def convex_combination_check(d: DiscreteHJB, u: Field, v: Field, g: Field,
                             alphas: Sequence[float] = DEFAULT_ALPHAS) -> Dict[float, float]:
    """
    Sign check on w = u + α(v - u) for two solutions u, v of F_h[·] = g.

    Convexity makes w a supersolution for α in [0, 1] and a subsolution
    outside. Returns, per α, the largest nodewise amount by which the expected
    inequality fails (<= 0 when it holds).
    """
    out = {}
    for alpha in alphas:
        w = u + alpha * (v - u)
        defect = (apply_Fh(d, w) - g).values
        if 0.0 <= alpha <= 1.0:
            out[float(alpha)] = float(defect.max())
        else:
            out[float(alpha)] = float(-defect.min())
    return out
