"""
Multi-start census of the solutions of F_h[u] = h + tφ.

Newton runs from the explicit sub- and supersolutions, the asymptotic
guesses, an eigen-direction ladder ±kφ, seeded random low-mode fields and
the midpoints of every pair already found. Converged fields are clustered
in sup-norm; three or more clusters must lie on one segment.
"""

import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from sklearn.cluster import DBSCAN

from src.ambrosetti_prodi.bounds import apriori_bound
from src.ambrosetti_prodi.context import ProblemContext
from src.discretization.field import Field
from src.discretization.grid import Grid
from src.errors import HJBLabError, InvariantViolation, PreconditionError
from src.solvers.constructions import build_subsolution, build_supersolution
from src.solvers.newton import semismooth_newton

COLINEAR_TOL = 1e-6
ORDER_TOL = 1e-10
LADDER_DEPTH = 6


@dataclass(frozen=True)
class Census:
    """
    Distinct solutions at one parameter value.

    Attributes:
        t: Parameter value.
        solutions: Cluster representatives, sorted by mean value.
        ordered: Every pair is nodewise comparable.
        colinear_segment: Three or more solutions on one segment u + k(ū - u).
        segment_coefficients: Fitted k of each intermediate solution.
        max_deviation: Largest colinearity residual.
        merge_distance: Smallest pairwise sup-norm distance (inf below two solutions).
        resolution_limited: t lies within 10 bisection tolerances of t*.
        starts: Newton starts tried.
        converged: Starts that converged.
    """

    t: float
    solutions: Tuple[Field, ...]
    ordered: bool
    colinear_segment: bool
    cluster_radius: float
    segment_coefficients: Tuple[float, ...] = ()
    max_deviation: float = 0.0
    merge_distance: float = float("inf")
    resolution_limited: bool = False
    starts: int = 0
    converged: int = 0
    residuals: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for u, v in itertools.combinations(self.solutions, 2):
            if u.distance(v) <= self.cluster_radius:
                raise InvariantViolation("census_separation", "two listed solutions share a cluster")
        if self.ordered and not all(comparable(u, v) for u, v in itertools.combinations(self.solutions, 2)):
            raise InvariantViolation("census_order", "census marked ordered with incomparable solutions")

    @property
    def count(self) -> int:
        return len(self.solutions)

    def to_summary(self) -> dict:
        return {
            "t": self.t,
            "count": self.count,
            "ordered": self.ordered,
            "colinear_segment": self.colinear_segment,
            "segment_coefficients": list(self.segment_coefficients),
            "max_deviation": self.max_deviation,
            "merge_distance": None if np.isinf(self.merge_distance) else self.merge_distance,
            "resolution_limited": self.resolution_limited,
            "starts": self.starts,
            "converged": self.converged,
            "residuals": list(self.residuals),
        }


def comparable(u: Field, v: Field, tol: float = ORDER_TOL) -> bool:
    diff = u.values - v.values
    return bool(np.all(diff >= -tol) or np.all(diff <= tol))


def random_smooth_field(grid: Grid, rng: np.random.Generator, amplitude: float, modes: int = 3) -> Field:
    """Random combination of the lowest Dirichlet sine modes."""
    pts = grid.coordinates
    values = np.zeros(grid.size)
    for index in itertools.product(range(1, modes + 1), repeat=grid.dim):
        term = np.ones(grid.size)
        for axis, m in enumerate(index):
            lo, hi = grid.extents[axis]
            term *= np.sin(m * np.pi * (pts[:, axis] - lo) / (hi - lo))
        values += rng.normal() / np.prod(index) * term
    peak = np.abs(values).max()
    return Field(grid, amplitude * values / peak if peak > 0 else values)


def colinearity_fit(solutions: List[Field]) -> Tuple[Tuple[float, ...], float]:
    """Fits ũ - u = k(ū - u) for every intermediate solution; returns (k values, max deviation)."""
    lower, upper = solutions[0], solutions[-1]
    span = (upper - lower).values
    denom = float(span @ span)
    ks, deviation = [], 0.0
    for u in solutions[1:-1]:
        diff = (u - lower).values
        k = float(diff @ span) / denom
        ks.append(k)
        deviation = max(deviation, float(np.abs(diff - k * span).max()))
    return tuple(ks), deviation


def _starts(ctx: ProblemContext, t: float, bound: float, rng: np.random.Generator,
            n_starts: int) -> List[Tuple[str, Field]]:
    s = ctx.settings
    starts = []
    try:
        starts.append(("subsolution", build_subsolution(ctx.d, ctx.h, ctx.phi, (t,), s.subsolution_margin,
                                                        bound, shift=s.shift, tol=s.tol,
                                                        howard_cap=s.howard_cap)))
    except HJBLabError as e:
        logger.warning("Census at t={:.4f}: no subsolution start ({})", t, e)
    try:
        starts.append(("supersolution", build_supersolution(ctx.d, ctx.h, ctx.phi, t, tol=s.tol,
                                                            howard_cap=s.howard_cap)))
    except HJBLabError as e:
        logger.debug("Census at t={:.4f}: no supersolution start ({})", t, e)

    starts += [("asymptotic+", t * ctx.w_star), ("asymptotic-", -t * ctx.w_star)]
    if t > 0.0:
        starts.append(("asymptotic_lower", t * ctx.w_lower))

    scale = max(bound, 1.0)
    for j in range(LADDER_DEPTH):
        k = scale * 2.0 ** (-j)
        starts += [(f"ladder+{k:.4g}", k * ctx.phi), (f"ladder-{k:.4g}", -k * ctx.phi)]

    for i in range(max(2, n_starts - len(starts))):
        starts.append((f"random{i}", random_smooth_field(ctx.grid, rng, scale)))
    return starts


def _cluster(found: List[Tuple[Field, float]], radius: float) -> List[Tuple[Field, float]]:
    if len(found) < 2:
        return list(found)
    X = np.stack([u.values for u, _ in found])
    labels = DBSCAN(eps=radius, min_samples=1, metric="chebyshev").fit(X).labels_
    reps = []
    for label in np.unique(labels):
        members = [found[i] for i in np.flatnonzero(labels == label)]
        reps.append(min(members, key=lambda pair: pair[1]))
    return reps


def count_solutions(ctx: ProblemContext, t: float, n_starts: Optional[int] = None,
                    seed: int = 0, t_star: Optional[float] = None,
                    tol: Optional[float] = None) -> Census:
    """
    Clusters every Newton limit found from the census starts.

    Never raises on numerical failure; failed starts are logged and skipped.
    """
    s = ctx.settings
    n_starts = s.n_starts if n_starts is None else n_starts
    if n_starts < 8:
        raise PreconditionError(f"count_solutions needs n_starts >= 8, got {n_starts}")
    tol = tol or s.census_tol
    t = float(t)
    g = ctx.rhs(t)
    rng = np.random.default_rng(seed)
    bound = apriori_bound(ctx.lambda_plus, ctx.lambda_minus, ctx.a0, ctx.norm(g), ctx.calibration.c_cal)

    def newton(start: Field) -> Optional[Tuple[Field, float]]:
        report = semismooth_newton(ctx.d, g, start, damping=s.damping, tol=tol, cap=s.newton_cap,
                                   damping_floor=s.damping_floor)
        return (report.solution, report.final_residual) if report.converged else None

    starts = _starts(ctx, t, bound, rng, n_starts)
    found = []
    for label, start in starts:
        hit = newton(start)
        if hit is not None:
            found.append(hit)
        else:
            logger.debug("Census start '{}' did not converge", label)

    clusters = _cluster(found, s.cluster_radius)
    tried = len(starts)
    for (u, _), (v, _) in itertools.combinations(list(clusters), 2):
        tried += 1
        hit = newton(0.5 * (u + v))
        if hit is not None:
            found.append(hit)
    clusters = _cluster(found, s.cluster_radius)

    clusters.sort(key=lambda pair: float(np.mean(pair[0].values)))
    solutions = [u for u, _ in clusters]
    ordered = all(comparable(u, v) for u, v in itertools.combinations(solutions, 2))
    if not ordered:
        logger.warning("Census at t={:.4f}: incomparable solutions found", t)

    ks, deviation, colinear = (), 0.0, False
    if len(solutions) >= 3:
        ks, deviation = colinearity_fit(solutions)
        colinear = deviation <= COLINEAR_TOL and all(0.0 < k < 1.0 for k in ks)

    merge = min((u.distance(v) for u, v in itertools.combinations(solutions, 2)), default=float("inf"))
    limited = t_star is not None and abs(t - t_star) <= 10.0 * s.tstar_tol
    if limited:
        logger.warning("Census at t={:.4f} is within 10 tolerances of t*; merge distance {:.3e}", t, merge)

    census = Census(t=t, solutions=tuple(solutions), ordered=ordered, colinear_segment=colinear,
                    cluster_radius=s.cluster_radius, segment_coefficients=ks, max_deviation=deviation,
                    merge_distance=merge, resolution_limited=limited, starts=tried, converged=len(found),
                    residuals=tuple(r for _, r in clusters))
    logger.info("Census at t={:.4f}: {} solution(s), ordered={}, colinear={}",
                t, census.count, ordered, colinear)
    return census
