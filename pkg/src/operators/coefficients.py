"""
Coefficient fields of a single linear elliptic operator.

A coefficient is either a closed-form expression in the spatial variables
``x`` (and ``y`` in 2D) parsed with SymPy, or a per-node table looked up by
nearest node. Both evaluate on an ``(n, dim)`` array of points and return an
``(n,)`` float array.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Optional, Tuple, Union

import numpy as np
import sympy
from scipy.spatial import cKDTree
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from src.errors import CoefficientError, DimensionError

_X, _Y = sympy.symbols("x y", real=True)
_SYMBOLS = {"x": _X, "y": _Y}
_FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "tanh": sympy.tanh,
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "abs": sympy.Abs,
    "min": sympy.Min,
    "max": sympy.Max,
    "pi": sympy.pi,
}

CoefficientLike = Union[str, float, int, "CoefficientField"]


def parse_expression(text: str) -> sympy.Expr:
    """Parses a coefficient expression, accepting only ``x``, ``y`` and elementary functions."""
    try:
        expr = parse_expr(
            str(text),
            local_dict={**_SYMBOLS, **_FUNCTIONS},
            transformations=standard_transformations,
        )
    except Exception as e:  # parse_expr surfaces tokenizer, syntax and type errors alike
        raise CoefficientError(f"Cannot parse coefficient expression '{text}': {e}") from e

    if not isinstance(expr, sympy.Expr):
        raise CoefficientError(f"Expression '{text}' is not scalar")

    unknown = expr.free_symbols - {_X, _Y}
    if unknown:
        names = ", ".join(sorted(str(s) for s in unknown))
        raise CoefficientError(f"Unknown symbols in '{text}': {names}")
    return expr


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Scalar coefficient ``x -> value``, expression-backed or table-backed."""

    expression: Optional[sympy.Expr] = None
    table_points: Optional[np.ndarray] = None
    table_values: Optional[np.ndarray] = None
    label: str = field(default="")

    @classmethod
    def of(cls, source: CoefficientLike) -> "CoefficientField":
        if isinstance(source, CoefficientField):
            return source
        if isinstance(source, (int, float, np.floating, np.integer)):
            return cls(expression=sympy.Float(float(source)) if source != 0 else sympy.Integer(0),
                       label=repr(float(source)))
        return cls(expression=parse_expression(source), label=str(source))

    @classmethod
    def from_table(cls, points: np.ndarray, values: np.ndarray) -> "CoefficientField":
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        values = np.asarray(values, dtype=float).ravel()
        if points.shape[0] != values.size:
            raise CoefficientError(
                f"Table has {points.shape[0]} points but {values.size} values"
            )
        if not np.all(np.isfinite(values)):
            raise CoefficientError("Table coefficient contains non-finite values")
        return cls(table_points=points, table_values=values, label="table")

    @property
    def is_table(self) -> bool:
        return self.table_values is not None

    @property
    def is_constant(self) -> bool:
        if self.is_table:
            return bool(np.ptp(self.table_values) == 0.0)
        return bool(self.expression.is_number)

    @property
    def is_zero(self) -> bool:
        if self.is_table:
            return bool(np.all(self.table_values == 0.0))
        return bool(self.expression == 0)

    @cached_property
    def _fn(self):
        return sympy.lambdify((_X, _Y), self.expression, modules="numpy")

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.table_points)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluates the coefficient at every row of ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]

        if self.is_table:
            if points.shape[1] != self.table_points.shape[1]:
                raise DimensionError(
                    f"Table coefficient is {self.table_points.shape[1]}D, points are {points.shape[1]}D"
                )
            _, idx = self._tree.query(points)
            return self.table_values[idx]

        xs = points[:, 0]
        ys = points[:, 1] if points.shape[1] > 1 else np.zeros(n)
        try:
            with np.errstate(all="ignore"):
                raw = self._fn(xs, ys)
            values = np.broadcast_to(np.asarray(raw, dtype=float), (n,)).copy()
        except Exception as e:
            raise CoefficientError(f"Evaluation of '{self.label}' failed: {e}") from e

        if not np.all(np.isfinite(values)):
            bad = points[~np.isfinite(values)][0]
            raise CoefficientError(f"Coefficient '{self.label}' is not finite at x={bad.tolist()}")
        return values

    def _key(self) -> Tuple[Any, ...]:
        if self.is_table:
            return ("table", self.table_points.tobytes(), self.table_values.tobytes())
        return ("expr", sympy.srepr(self.expression))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoefficientField):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"CoefficientField({self.label or self.expression})"


ZERO = CoefficientField.of(0)


def _as_matrix(A: Any, dim: int) -> Tuple[Tuple[CoefficientField, ...], ...]:
    if isinstance(A, (str, int, float, CoefficientField)):
        diag = CoefficientField.of(A)
        return tuple(
            tuple(diag if i == j else ZERO for j in range(dim)) for i in range(dim)
        )
    rows = list(A)
    if len(rows) != dim or any(len(row) != dim for row in rows):
        raise DimensionError(f"Diffusion matrix must be {dim}x{dim}")
    return tuple(tuple(CoefficientField.of(entry) for entry in row) for row in rows)


def _as_vector(b: Any, dim: int) -> Tuple[CoefficientField, ...]:
    if isinstance(b, (str, int, float, CoefficientField)):
        if dim != 1:
            raise DimensionError(f"Drift must have {dim} components")
        return (CoefficientField.of(b),)
    entries = list(b)
    if len(entries) != dim:
        raise DimensionError(f"Drift must have {dim} components, got {len(entries)}")
    return tuple(CoefficientField.of(entry) for entry in entries)


@dataclass(frozen=True)
class LinearCoefficients:
    """
    Coefficients (A, b, c, f) of one linear operator ``tr(A D²u) + b·Du + c u - f``.

    Attributes:
        A: dim x dim nested tuple of coefficient fields (symmetric).
        b: drift components.
        c: zeroth-order coefficient.
        f: inhomogeneity.
    """

    A: Tuple[Tuple[CoefficientField, ...], ...]
    b: Tuple[CoefficientField, ...]
    c: CoefficientField
    f: CoefficientField

    @classmethod
    def build(cls, A: Any = 1.0, b: Any = None, c: Any = 0.0, f: Any = 0.0,
              dim: int = 1) -> "LinearCoefficients":
        """Builds coefficients from scalars, expression strings or nested lists."""
        if b is None:
            b = [0.0] * dim
        coeffs = cls(A=_as_matrix(A, dim), b=_as_vector(b, dim),
                     c=CoefficientField.of(c), f=CoefficientField.of(f))
        for i in range(dim):
            for j in range(i + 1, dim):
                if coeffs.A[i][j] != coeffs.A[j][i]:
                    raise CoefficientError(f"Diffusion matrix is not symmetric at ({i},{j})")
        return coeffs

    @property
    def dim(self) -> int:
        return len(self.b)

    @property
    def is_diagonal(self) -> bool:
        return all(
            self.A[i][j].is_zero
            for i in range(self.dim) for j in range(self.dim) if i != j
        )

    def with_source(self, f: CoefficientLike) -> "LinearCoefficients":
        return LinearCoefficients(A=self.A, b=self.b, c=self.c, f=CoefficientField.of(f))

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Returns ``(A (n,d,d), b (n,d), c (n,), f (n,))`` at the given points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n, dim = points.shape[0], self.dim
        if points.shape[1] != dim:
            raise DimensionError(f"Points are {points.shape[1]}D, operator is {dim}D")

        A = np.empty((n, dim, dim))
        for i in range(dim):
            for j in range(dim):
                A[:, i, j] = self.A[i][j].evaluate(points)
        b = np.stack([bi.evaluate(points) for bi in self.b], axis=1)
        return A, b, self.c.evaluate(points), self.f.evaluate(points)

    def diagonal(self, points: np.ndarray) -> np.ndarray:
        """Diagonal diffusion entries, ``(n, dim)``."""
        return np.stack([self.A[i][i].evaluate(points) for i in range(self.dim)], axis=1)


def coefficient_violations(coeffs: LinearCoefficients, points: np.ndarray, lambda_min: float,
                           lambda_max: float, gamma: float, delta: float) -> dict:
    """Largest amount by which sampled coefficients leave the declared structure bounds."""
    A, b, c, _ = coeffs.evaluate(points)
    asym = float(np.max(np.abs(A - np.transpose(A, (0, 2, 1))))) if A.size else 0.0
    eig = np.linalg.eigvalsh(0.5 * (A + np.transpose(A, (0, 2, 1))))
    return {
        "symmetry": asym,
        "ellipticity": float(max(0.0, lambda_min - eig.min(), eig.max() - lambda_max)),
        "drift": float(max(0.0, np.linalg.norm(b, axis=1).max() - gamma)),
        "zeroth_order": float(max(0.0, np.abs(c).max() - delta)),
    }



@dataclass(frozen=True, eq=False)
class MinShiftedField(CoefficientField):
    """``base(x) - min_k pool_k(x)``; the source of a normalized control."""

    base: Optional[CoefficientField] = None
    pool: Tuple[CoefficientField, ...] = ()

    @property
    def is_table(self) -> bool:
        return False

    @property
    def is_constant(self) -> bool:
        return self.base.is_constant and all(f.is_constant for f in self.pool)

    @property
    def is_zero(self) -> bool:
        return all(f == self.base for f in self.pool)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        floor = np.min([f.evaluate(points) for f in self.pool], axis=0)
        return self.base.evaluate(points) - floor

    def _key(self) -> Tuple[Any, ...]:
        return ("shifted", self.base._key(), tuple(f._key() for f in self.pool))

    def __repr__(self) -> str:
        return f"MinShiftedField({self.base!r})"
