"""
Bisection for the threshold t*(h).

Solvability is monotone in t (a solution at t is a supersolution at every
s > t), so verdicts along increasing t read NO_SOLUTION ... SOLVABLE with a
single switch, and bisection on the verdict converges to t*.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from loguru import logger

from src.ambrosetti_prodi.bounds import tstar_bracket
from src.ambrosetti_prodi.context import ProblemContext
from src.ambrosetti_prodi.verdicts import SolvabilityVerdict, Verdict, solvable
from src.discretization.field import Field
from src.errors import BracketError, InvariantViolation

# keeps the starting bracket open when both calibrated ends coincide
BRACKET_MARGIN = 1.0


@dataclass(frozen=True)
class TStarResult:
    """
    Located threshold with its bisection transcript.

    Attributes:
        t_star: Midpoint of the final bracket.
        bracket_history: Every (t_lo, t_hi) visited, the initial one first.
        initial_bracket: Bracket the bisection started from (after any expansion).
        calibrated_bracket: Bracket predicted by the calibrated constants.
        verdicts: Verdict of every tested t.
        tol: Requested bracket width.
        expansions: How often the calibrated bracket had to be widened.
    """

    t_star: float
    bracket_history: Tuple[Tuple[float, float], ...]
    initial_bracket: Tuple[float, float]
    calibrated_bracket: Tuple[float, float]
    verdicts: Mapping[float, SolvabilityVerdict]
    tol: float
    expansions: int = 0

    def __post_init__(self):
        lo, hi = self.bracket_history[-1]
        if hi - lo > self.tol:
            raise InvariantViolation("tstar_width", f"final bracket width {hi - lo:.3e} > {self.tol}")
        first_lo, first_hi = self.initial_bracket
        if self.verdicts[first_lo].status is not Verdict.NO_SOLUTION \
                or self.verdicts[first_hi].status is not Verdict.SOLVABLE:
            raise InvariantViolation("tstar_endpoints", "initial bracket endpoints carry the wrong verdicts")

    @property
    def final_bracket(self) -> Tuple[float, float]:
        return self.bracket_history[-1]

    @property
    def inside_calibrated_bracket(self) -> bool:
        """t* lies in the calibrated bracket up to the bisection tolerance."""
        lo, hi = self.calibrated_bracket
        return lo - self.tol <= self.t_star <= hi + self.tol

    @property
    def inconclusive(self) -> int:
        return sum(v.status is Verdict.INCONCLUSIVE for v in self.verdicts.values())

    def to_summary(self) -> dict:
        return {
            "t_star": self.t_star,
            "tol": self.tol,
            "initial_bracket": list(self.initial_bracket),
            "calibrated_bracket": list(self.calibrated_bracket),
            "final_bracket": list(self.final_bracket),
            "expansions": self.expansions,
            "inconclusive": self.inconclusive,
            "verdicts": [self.verdicts[t].to_summary() for t in sorted(self.verdicts)],
        }


def check_monotone_transcript(verdicts: Mapping[float, SolvabilityVerdict]) -> None:
    """Raises InvariantViolation when a NO_SOLUTION verdict sits above a SOLVABLE one."""
    lowest_solvable = min((t for t, v in verdicts.items() if v.status is Verdict.SOLVABLE), default=None)
    if lowest_solvable is None:
        return
    above = [t for t, v in verdicts.items() if v.status is Verdict.NO_SOLUTION and t > lowest_solvable]
    if above:
        raise InvariantViolation(
            "monotone_solvability",
            f"NO_SOLUTION at t={min(above):.6f} above SOLVABLE at t={lowest_solvable:.6f}",
        )


def _decisive(ctx: ProblemContext, t: float) -> SolvabilityVerdict:
    verdict = solvable(ctx, t)
    if verdict.status is Verdict.INCONCLUSIVE:
        logger.warning("Retrying t={:.6f} with a doubled Perron cap", t)
        verdict = solvable(ctx, t, cap=2 * ctx.settings.perron_cap)
    return verdict


def find_tstar(ctx: ProblemContext, tol: Optional[float] = None) -> TStarResult:
    """
    Locates t*(h) to within ``tol`` (default ``settings.tstar_tol``).

    Raises:
        BracketError: both ends still share a verdict after ``bracket_expansions``
            widenings, or an inconclusive step left no endpoint free to move; the
            diagnostic holds the verdicts involved.
    """
    tol = tol or ctx.settings.tstar_tol
    verdicts: Dict[float, SolvabilityVerdict] = {}
    calibrated = tstar_bracket(ctx)
    lo, hi = calibrated[0] - BRACKET_MARGIN, calibrated[1] + BRACKET_MARGIN
    logger.info("t* bracket from calibrated constants: [{:.4f}, {:.4f}], searching [{:.4f}, {:.4f}]",
                calibrated[0], calibrated[1], lo, hi)

    expansions = 0
    with ThreadPoolExecutor(max_workers=2) as pool:
        while True:
            pending = [t for t in (lo, hi) if t not in verdicts]
            for t, v in zip(pending, pool.map(lambda s: _decisive(ctx, s), pending)):
                verdicts[t] = v
            low_ok = verdicts[lo].status is Verdict.NO_SOLUTION
            high_ok = verdicts[hi].status is Verdict.SOLVABLE
            if low_ok and high_ok:
                break
            if expansions >= ctx.settings.bracket_expansions:
                raise BracketError(
                    f"Bracket [{lo:.4f}, {hi:.4f}] still lacks a verdict switch after {expansions} expansions",
                    diagnostic={"low": verdicts[lo].to_summary(), "high": verdicts[hi].to_summary()},
                )
            width = hi - lo
            if not low_ok:
                lo -= width
            if not high_ok:
                hi += width
            expansions += 1
            logger.warning("Calibration failure: widening the t* bracket to [{:.4f}, {:.4f}]", lo, hi)

    initial = (lo, hi)
    history: List[Tuple[float, float]] = [initial]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        verdicts[mid] = v = _decisive(ctx, mid)
        if v.status is Verdict.SOLVABLE:
            hi = mid
        elif v.status is Verdict.NO_SOLUTION:
            lo = mid
        else:
            quarter = 0.25 * (hi - lo)
            q_lo, q_hi = lo + quarter, hi - quarter
            verdicts[q_lo] = v_lo = _decisive(ctx, q_lo)
            verdicts[q_hi] = v_hi = _decisive(ctx, q_hi)
            if v_lo.status is Verdict.SOLVABLE:
                hi = q_lo
            elif v_hi.status is Verdict.NO_SOLUTION:
                lo = q_hi
            elif v_lo.status is Verdict.NO_SOLUTION or v_hi.status is Verdict.SOLVABLE:
                # an endpoint only moves past a point with the matching verdict
                if v_lo.status is Verdict.NO_SOLUTION:
                    lo = q_lo
                if v_hi.status is Verdict.SOLVABLE:
                    hi = q_hi
            else:
                raise BracketError(
                    f"Verdicts at {q_lo:.6f}, {mid:.6f} and {q_hi:.6f} are all inconclusive; "
                    f"t* stays in [{lo:.6f}, {hi:.6f}]",
                    diagnostic={"bracket": [lo, hi],
                                "verdicts": [verdicts[t].to_summary() for t in (q_lo, mid, q_hi)]},
                )
            logger.warning("Inconclusive at t={:.6f}; bracket shrunk to [{:.6f}, {:.6f}]", mid, lo, hi)
        history.append((lo, hi))

    check_monotone_transcript(verdicts)
    result = TStarResult(t_star=0.5 * (lo + hi), bracket_history=tuple(history), initial_bracket=initial,
                         calibrated_bracket=calibrated, verdicts=verdicts, tol=tol, expansions=expansions)
    logger.info("t* = {:.6f} (bracket [{:.6f}, {:.6f}], {} verdicts)", result.t_star, lo, hi, len(verdicts))
    return result


def tstar_continuity_probe(ctx: ProblemContext, perturbations: Sequence[Field],
                           tol: Optional[float] = None) -> List[Tuple[float, float]]:
    """(‖h_k - h‖, |t*(h_k) - t*(h)|) for h_k = h + perturbation_k."""
    base = find_tstar(ctx, tol).t_star
    rows = []
    for pert in perturbations:
        shifted = find_tstar(ctx.with_h(ctx.h + pert), tol).t_star
        rows.append((ctx.norm(pert), abs(shifted - base)))
        logger.info("|dh| = {:.4e} -> |dt*| = {:.4e}", rows[-1][0], rows[-1][1])
    return rows
