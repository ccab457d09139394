"""
Tensor grids on intervals and rectangles with Dirichlet boundaries.

Interior nodes sit at ``lo + i*h`` for ``i = 1..n`` on every axis with
``h = (hi - lo) / (n + 1)``; boundary nodes are implicit zeros. Excised nodes
(the closed set Γ) also carry the Dirichlet value and are dropped from the
unknowns.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import ndimage
from scipy.spatial import cKDTree

from src.errors import GridError

Box = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class HoleSpec:
    """
    Closed box or disk removed from the domain.

    A box uses ``lower``/``upper`` corners; a disk (2D) or interval (1D) uses
    ``center`` and ``radius``.
    """

    kind: str = "box"
    lower: Tuple[float, ...] = ()
    upper: Tuple[float, ...] = ()
    center: Tuple[float, ...] = ()
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in ("box", "disk"):
            raise GridError(f"Unknown hole kind '{self.kind}'")
        if self.kind == "box":
            if len(self.lower) != len(self.upper) or not self.lower:
                raise GridError("Box hole needs matching lower/upper corners")
            if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
                raise GridError(f"Box hole has inverted corners {self.lower} > {self.upper}")
        elif not self.center or self.radius < 0.0:
            raise GridError("Disk hole needs a center and a nonnegative radius")

    @classmethod
    def centered_box(cls, extents: Box, side: Union[float, Sequence[float]]) -> "HoleSpec":
        sides = np.broadcast_to(np.asarray(side, dtype=float), (len(extents),))
        mid = np.array([(lo + hi) / 2 for lo, hi in extents])
        return cls(kind="box", lower=tuple(mid - sides / 2), upper=tuple(mid + sides / 2))

    @classmethod
    def from_dict(cls, raw: Dict) -> "HoleSpec":
        kind = raw.get("kind", "box")
        return cls(
            kind=kind,
            lower=tuple(float(v) for v in raw.get("lower", ())),
            upper=tuple(float(v) for v in raw.get("upper", ())),
            center=tuple(float(v) for v in raw.get("center", ())),
            radius=float(raw.get("radius", 0.0)),
        )

    @property
    def dim(self) -> int:
        return len(self.lower) if self.kind == "box" else len(self.center)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.kind == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            return np.all((points >= lo - tol) & (points <= hi + tol), axis=1)
        dist = np.linalg.norm(points - np.asarray(self.center), axis=1)
        return dist <= self.radius + tol

    def within(self, extents: Box) -> bool:
        if self.kind == "box":
            return all(elo <= lo and hi <= ehi
                       for (elo, ehi), lo, hi in zip(extents, self.lower, self.upper))
        return all(elo <= c - self.radius and c + self.radius <= ehi
                   for (elo, ehi), c in zip(extents, self.center))


@dataclass(frozen=True)
class DomainSpec:
    extents: Box
    n: Tuple[int, ...]
    holes: Tuple[HoleSpec, ...] = field(default_factory=tuple)


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Uniform interior lattice plus the mask of excised nodes.

    Attributes:
        extents: Per-axis (lo, hi) bounds.
        n: Per-axis interior node counts.
        hole_mask: Boolean array of shape ``n``; True marks an excised node.
    """

    extents: Box
    n: Tuple[int, ...]
    hole_mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.hole_mask, dtype=bool, copy=True).reshape(self.n)
        mask.setflags(write=False)
        object.__setattr__(self, "hole_mask", mask)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def h(self) -> Tuple[float, ...]:
        return tuple((hi - lo) / (k + 1) for (lo, hi), k in zip(self.extents, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def size(self) -> int:
        return int((~self.hole_mask).sum())

    @property
    def hole_area(self) -> float:
        return float(self.hole_mask.sum()) * self.cell_volume

    @property
    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.extents]))

    @cached_property
    def axes(self) -> Tuple[np.ndarray, ...]:
        return tuple(lo + step * np.arange(1, k + 1)
                     for (lo, _), k, step in zip(self.extents, self.n, self.h))

    @cached_property
    def lattice_points(self) -> np.ndarray:
        """Coordinates of every interior lattice node, excised or not, C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def kept_flat(self) -> np.ndarray:
        return np.flatnonzero(~self.hole_mask.ravel())

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Coordinates of the unknowns, shape ``(size, dim)``."""
        return self.lattice_points[self.kept_flat]

    @cached_property
    def index_map(self) -> np.ndarray:
        """Lattice-shaped array: unknown index of each node, -1 for excised nodes."""
        index = np.full(self.hole_mask.size, -1, dtype=np.int64)
        index[self.kept_flat] = np.arange(self.kept_flat.size)
        return index.reshape(self.n)

    @cached_property
    def lattice_index(self) -> np.ndarray:
        """Multi-index of every unknown, shape ``(size, dim)``."""
        return np.stack(np.unravel_index(self.kept_flat, self.n), axis=1)

    def neighbors(self, axis: int, step: int) -> np.ndarray:
        """Unknown index of the ``step`` (+1/-1) neighbor along ``axis``; -1 if Dirichlet."""
        idx = self.lattice_index.copy()
        idx[:, axis] += step
        inside = (idx[:, axis] >= 0) & (idx[:, axis] < self.n[axis])
        out = np.full(self.size, -1, dtype=np.int64)
        out[inside] = self.index_map[tuple(idx[inside].T)]
        return out

    @cached_property
    def excised_points(self) -> np.ndarray:
        return self.lattice_points[np.flatnonzero(self.hole_mask.ravel())]

    def matches(self, other: "Grid") -> bool:
        return (self is other) or (
            self.extents == other.extents
            and self.n == other.n
            and np.array_equal(self.hole_mask, other.hole_mask)
        )

    def connectivity_report(self) -> Dict[str, int]:
        """Components of the kept nodes and how many never touch the outer boundary."""
        labels, count = ndimage.label(~self.hole_mask)
        edge = np.zeros(self.n, dtype=bool)
        for axis in range(self.dim):
            first = [slice(None)] * self.dim
            last = [slice(None)] * self.dim
            first[axis], last[axis] = 0, -1
            edge[tuple(first)] = True
            edge[tuple(last)] = True
        touching = set(np.unique(labels[edge & (labels > 0)]).tolist())
        return {"components": int(count), "enclosed": int(count - len(touching))}

    @cached_property
    def inscribed_radius(self) -> float:
        return float(distance_field(self).values.max())

    def describe(self) -> str:
        return (f"{self.dim}D grid n={self.n} h={tuple(round(v, 6) for v in self.h)} "
                f"unknowns={self.size} excised={int(self.hole_mask.sum())}")


def _validate_extents(extents: Iterable, n: Iterable) -> Tuple[Box, Tuple[int, ...]]:
    box = tuple((float(lo), float(hi)) for lo, hi in extents)
    counts = tuple(int(k) for k in n)
    if not box or len(box) > 2:
        raise GridError(f"Only 1D and 2D domains are supported, got {len(box)} axes")
    if len(counts) != len(box):
        raise GridError(f"Need one node count per axis, got {counts} for {len(box)} axes")
    if any(not np.isfinite(lo) or not np.isfinite(hi) or hi - lo <= 0.0 for lo, hi in box):
        raise GridError(f"Degenerate extents {box}")
    if any(k < 3 for k in counts):
        raise GridError(f"Need at least 3 interior nodes per axis, got {counts}")
    return box, counts


def _excise(grid: Grid, holes: Sequence[HoleSpec]) -> np.ndarray:
    mask = grid.hole_mask.ravel().copy()
    tol = 1e-9 * min(grid.h)
    for hole in holes:
        if hole.dim != grid.dim:
            raise GridError(f"Hole is {hole.dim}D, grid is {grid.dim}D")
        mask |= hole.contains(grid.lattice_points, tol=tol)
    return mask.reshape(grid.n)


def build_grid(spec: DomainSpec) -> Grid:
    """Builds the grid of ``spec`` and excises every requested hole."""
    extents, n = _validate_extents(spec.extents, spec.n)
    grid = Grid(extents=extents, n=n, hole_mask=np.zeros(n, dtype=bool))
    if spec.holes:
        mask = _excise(grid, spec.holes)
        if mask.all():
            raise GridError("Hole covers every interior node")
        grid = Grid(extents=extents, n=n, hole_mask=mask)
    logger.debug("Built {}", grid.describe())
    return grid


def restrict_domain(grid: Grid, gamma: Optional[Union[HoleSpec, Sequence[HoleSpec]]]) -> Grid:
    """Same grid with the nodes of Γ added to the excised set."""
    if gamma is None:
        return grid
    holes = [gamma] if isinstance(gamma, HoleSpec) else list(gamma)
    if not holes:
        return grid
    for hole in holes:
        if not hole.within(grid.extents):
            raise GridError(f"Excised set {hole} leaves the domain {grid.extents}")

    mask = _excise(grid, holes)
    if mask.all():
        raise GridError("Restriction leaves no interior nodes")
    restricted = Grid(extents=grid.extents, n=grid.n, hole_mask=mask)
    logger.debug("Restricted domain: |Γ| = {:.6f}", restricted.hole_area - grid.hole_area)
    return restricted


def distance_field(grid: Grid):
    """
    Distance of each unknown to the nearest Dirichlet node.

    The outer boundary distance is exact for boxes; the hole contribution is the
    distance to the nearest excised node.
    """
    from src.discretization.field import Field

    pts = grid.coordinates
    lo = np.array([b[0] for b in grid.extents])
    hi = np.array([b[1] for b in grid.extents])
    dist = np.min(np.concatenate([pts - lo, hi - pts], axis=1), axis=1)

    if grid.hole_mask.any():
        hole_dist, _ = cKDTree(grid.excised_points).query(pts)
        dist = np.minimum(dist, hole_dist)
    return Field(grid, dist)
