"""
Empirical constants of the a-priori estimates.

C0 is the largest measured ratio ‖u‖∞ / bound(C=1) over every solution of the
calibration suite, T0 the largest t*(h)/‖h⁻‖; both are multiplied by the
safety factor before use.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

from loguru import logger

from src.ambrosetti_prodi.bounds import apriori_bound
from src.ambrosetti_prodi.branches import trace_branches
from src.ambrosetti_prodi.context import ProblemContext
from src.ambrosetti_prodi.tstar import find_tstar
from src.config import CalibrationSection

DEFAULT_T0 = 1.0


@dataclass(frozen=True)
class CalibrationResult:
    c_cal: float
    t0_cal: float
    safety: float
    max_bound_ratio: float
    max_tstar_ratio: float
    samples: List[Dict] = field(default_factory=list)

    def section(self) -> CalibrationSection:
        return CalibrationSection(c_cal=self.c_cal, t0_cal=self.t0_cal, safety=self.safety)

    def to_dict(self) -> Dict:
        return asdict(self)

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def bound_ratio(ctx: ProblemContext, t: float, u_norm: float, c_cal: float = 1.0) -> float:
    """‖u‖∞ over the a-priori bound at parameter t."""
    bound = apriori_bound(ctx.lambda_plus, ctx.lambda_minus, ctx.a0, ctx.norm(ctx.rhs(t)), c_cal)
    return u_norm / bound if bound > 0.0 else 0.0


def calibrate(problems: Sequence[Tuple[str, ProblemContext, Sequence[float]]],
              safety: float = 2.0) -> CalibrationResult:
    """
    Measures C0 and T0 over ``problems``.

    Args:
        problems: (label, context, t offsets) triples; branches are traced at
            t* + offset for every offset.
        safety: Factor applied to both measured maxima.
    """
    samples, bound_ratios, tstar_ratios = [], [], []
    for label, ctx, offsets in problems:
        tstar = find_tstar(ctx)
        h_minus = ctx.norm(ctx.h.negative_part)
        if h_minus > 0.0:
            tstar_ratios.append(tstar.t_star / h_minus)

        ts = [tstar.t_star + float(dt) for dt in offsets]
        for point in trace_branches(ctx, ts, t_star=tstar.t_star):
            for name, u in (("low", point.u_low), ("up", point.u_up)):
                if u is None:
                    continue
                ratio = bound_ratio(ctx, point.t, u.sup_norm())
                bound_ratios.append(ratio)
                samples.append({"problem": label, "t": point.t, "branch": name, "ratio": ratio,
                                "t_star": tstar.t_star})
        logger.info("Calibration problem '{}': t* = {:.6f}", label, tstar.t_star)

    max_bound = max(bound_ratios, default=0.0)
    max_tstar = max(tstar_ratios, default=0.0)
    c_cal = safety * max_bound if max_bound > 0.0 else CalibrationSection().c_cal
    if max_tstar > 0.0:
        t0 = safety * max_tstar
    else:
        logger.warning("No calibration problem yields a positive t*/|h-|; keeping T0 = {}", DEFAULT_T0)
        t0 = DEFAULT_T0
    return CalibrationResult(c_cal=c_cal, t0_cal=t0, safety=safety, max_bound_ratio=max_bound,
                             max_tstar_ratio=max_tstar, samples=samples)
