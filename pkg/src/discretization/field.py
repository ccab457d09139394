from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import pandas as pd

from src.discretization.grid import Grid
from src.errors import GridError

Scalar = Union[int, float, np.floating]


@dataclass(frozen=True, eq=False)
class Field:
    """One value per unknown of ``grid``; boundary and excised nodes are implicitly 0."""

    grid: Grid
    values: np.ndarray

    __array_ufunc__ = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True).ravel()
        if values.size != self.grid.size:
            raise GridError(f"Field has {values.size} values, grid has {self.grid.size} unknowns")
        if not np.all(np.isfinite(values)):
            raise GridError("Field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.size, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "Field":
        """Samples ``fn(x)`` (1D) or ``fn(x, y)`` (2D) at the unknowns."""
        pts = grid.coordinates
        values = fn(*[pts[:, i] for i in range(grid.dim)])
        return cls(grid, np.broadcast_to(np.asarray(values, dtype=float), (grid.size,)))

    @classmethod
    def from_expression(cls, grid: Grid, text: str) -> "Field":
        from src.operators.coefficients import CoefficientField

        return cls(grid, CoefficientField.of(text).evaluate(grid.coordinates))

    def _other(self, other) -> np.ndarray:
        if isinstance(other, Field):
            if not self.grid.matches(other.grid):
                raise GridError("Fields live on different grids")
            return other.values
        return np.asarray(other, dtype=float)

    def __add__(self, other) -> "Field":
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Field":
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other) -> "Field":
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other) -> "Field":
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "Field":
        return Field(self.grid, self.values / float(other))

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def positive_part(self) -> "Field":
        return Field(self.grid, np.maximum(self.values, 0.0))

    @property
    def negative_part(self) -> "Field":
        """u⁻ = max(-u, 0) >= 0."""
        return Field(self.grid, np.maximum(-self.values, 0.0))

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def lp_norm(self, p: float = np.inf) -> float:
        """Discrete L^p norm weighted by the cell volume; ``p = inf`` is the sup-norm."""
        if np.isinf(p):
            return self.sup_norm()
        return float((np.sum(np.abs(self.values) ** p) * self.grid.cell_volume) ** (1.0 / p))

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())

    def distance(self, other: "Field") -> float:
        return float(np.abs(self.values - self._other(other)).max())

    def to_frame(self, name: str = "value") -> pd.DataFrame:
        columns = ["x", "y"][: self.grid.dim]
        df = pd.DataFrame(self.grid.coordinates, columns=columns)
        df[name] = self.values
        return df
