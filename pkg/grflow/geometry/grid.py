import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

logger = logging.getLogger("geometry")

__all__ = [
    "GridSpec",
    "ScalarField",
    "SymTensorField",
    "MetricField",
    "ThreeFormField",
    "Tensor3Field",
    "ShapeError",
    "DegenerateMetricError",
    "UnsupportedDimensionError",
]

#: Smallest admissible metric eigenvalue. Anything below aborts.
EIGENVALUE_FLOOR = 1e-10


class ShapeError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


class DegenerateMetricError(ValueError):
    """Raised when a metric fails the positive definiteness check.

    :param index: grid index of the offending point
    :param coordinates: coordinates of that point
    :param eigenvalue: the smallest eigenvalue found there
    """

    def __init__(self, index, coordinates, eigenvalue: float) -> None:
        self.index = tuple(int(i) for i in index)
        self.coordinates = tuple(float(c) for c in coordinates)
        self.eigenvalue = float(eigenvalue)
        super().__init__(
            f"metric is not positive definite at grid point {self.index} "
            f"(x = {self.coordinates}, smallest eigenvalue {self.eigenvalue:.6e})"
        )


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridSpec:
    """
    A periodic grid over an n-torus with flat coordinates.

    :param dim: number of coordinate axes (2 or 3)
    :param points: points per axis
    :param sides: coordinate period per axis
    :param order: order of the centered differences (2, or 4)
    """

    dim: int
    points: tuple[int, ...]
    sides: tuple[float, ...]
    order: int = 2

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise UnsupportedDimensionError(f"grid dimension must be 2 or 3, got {self.dim}")
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))
        object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))
        if len(self.points) != self.dim or len(self.sides) != self.dim:
            raise ShapeError(
                f"grid of dimension {self.dim} needs {self.dim} point counts and sides"
            )
        if min(self.points) < 8:
            raise ShapeError(f"at least 8 points per axis are required, got {self.points}")
        if min(self.sides) <= 0 or not all(np.isfinite(self.sides)):
            raise ShapeError(f"side lengths must be positive, got {self.sides}")
        if self.order not in (2, 4):
            raise ValueError(f"difference order must be 2 or 4, got {self.order}")

    @classmethod
    def cube(cls, dim: int, points: int, side: float = 1.0, order: int = 2) -> "GridSpec":
        return cls(dim, (points,) * dim, (side,) * dim, order)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(s / p for s, p in zip(self.sides, self.points))

    @property
    def min_spacing(self) -> float:
        return min(self.spacing)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def refined(self, factor: int = 2) -> "GridSpec":
        """The same torus with ``factor`` times as many points per axis."""
        return GridSpec(
            self.dim, tuple(p * factor for p in self.points), self.sides, self.order
        )

    def coordinates(self) -> tuple[np.ndarray, ...]:
        axes = [np.arange(p) * h for p, h in zip(self.points, self.spacing)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def point(self, index) -> tuple[float, ...]:
        return tuple(i * h for i, h in zip(index, self.spacing))

    def wrap(self, displacement) -> np.ndarray:
        """Shortest periodic representative of a coordinate displacement."""
        sides = np.asarray(self.sides)
        d = np.asarray(displacement, dtype=float)
        return d - sides * np.round(d / sides)

    def check(self, values: np.ndarray, trailing: tuple[int, ...] = ()) -> None:
        expected = self.shape + trailing
        if values.shape != expected:
            raise ShapeError(f"expected array of shape {expected}, got {values.shape}")

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": list(self.points),
            "sides": list(self.sides),
            "order": self.order,
        }


def same_grid(*fields) -> GridSpec:
    """Returns the common grid of the fields, or raises ShapeError."""
    grids = {f.grid for f in fields}
    if len(grids) != 1:
        raise ShapeError(f"fields live on different grids: {sorted(map(str, grids))}")
    return fields[0].grid


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        self.grid.check(values)
        if not np.all(np.isfinite(values)):
            raise ValueError("scalar field has non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


def _triu(dim: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(dim)


@dataclass(frozen=True, eq=False)
class SymTensorField:
    """
    A symmetric 2-tensor per grid point.

    Only the upper triangle is stored (``upper[..., m]`` in row-major
    ``numpy.triu_indices`` order), so symmetry holds by construction.
    """

    grid: GridSpec
    upper: np.ndarray

    def __post_init__(self) -> None:
        d = self.grid.dim
        upper = _frozen(self.upper)
        self.grid.check(upper, (d * (d + 1) // 2,))
        if not np.all(np.isfinite(upper)):
            raise ValueError("tensor field has non-finite entries")
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_matrix(cls, grid: GridSpec, matrix: np.ndarray) -> "SymTensorField":
        """Builds the field from full matrices, symmetrizing them first."""
        matrix = np.asarray(matrix, dtype=float)
        grid.check(matrix, (grid.dim, grid.dim))
        sym = 0.5 * (matrix + np.swapaxes(matrix, -1, -2))
        i, j = _triu(grid.dim)
        return cls(grid, sym[..., i, j])

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SymTensorField":
        d = grid.dim
        return cls(grid, np.zeros(grid.shape + (d * (d + 1) // 2,)))

    @cached_property
    def matrix(self) -> np.ndarray:
        d = self.grid.dim
        i, j = _triu(d)
        full = np.empty(self.grid.shape + (d, d))
        full[..., i, j] = self.upper
        full[..., j, i] = self.upper
        full.setflags(write=False)
        return full


@dataclass(frozen=True, eq=False)
class MetricField:
    """A positive definite symmetric 2-tensor field."""

    base: SymTensorField

    def __post_init__(self) -> None:
        eig = np.linalg.eigvalsh(self.base.matrix)
        smallest = eig[..., 0]
        worst = np.unravel_index(np.argmin(smallest), smallest.shape)
        if not smallest[worst] > EIGENVALUE_FLOOR:
            raise DegenerateMetricError(
                worst, self.grid.point(worst), smallest[worst]
            )
        object.__setattr__(self, "_eigenvalues", eig)

    @classmethod
    def from_matrix(cls, grid: GridSpec, matrix: np.ndarray) -> "MetricField":
        return cls(SymTensorField.from_matrix(grid, matrix))

    @classmethod
    def flat(cls, grid: GridSpec, scale: float = 1.0) -> "MetricField":
        eye = np.broadcast_to(scale * np.eye(grid.dim), grid.shape + (grid.dim, grid.dim))
        return cls.from_matrix(grid, eye)

    @property
    def grid(self) -> GridSpec:
        return self.base.grid

    @property
    def matrix(self) -> np.ndarray:
        return self.base.matrix

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.linalg.inv(self.matrix)
        inv = 0.5 * (inv + np.swapaxes(inv, -1, -2))
        inv.setflags(write=False)
        return inv

    @cached_property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.matrix)

    @cached_property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(self.det)

    @property
    def min_eigenvalue(self) -> float:
        return float(self._eigenvalues[..., 0].min())

    @property
    def max_eigenvalue(self) -> float:
        return float(self._eigenvalues[..., -1].max())


@dataclass(frozen=True, eq=False)
class ThreeFormField:
    """H = phi dx^1 ^ dx^2 ^ dx^3; closed because it has top degree."""

    grid: GridSpec
    coefficient: ScalarField

    def __post_init__(self) -> None:
        if self.grid.dim != 3:
            raise UnsupportedDimensionError(
                f"three-forms need a 3-dimensional grid, got dimension {self.grid.dim}"
            )
        if self.coefficient.grid != self.grid:
            raise ShapeError("three-form coefficient lives on another grid")

    @classmethod
    def from_values(cls, grid: GridSpec, values: np.ndarray) -> "ThreeFormField":
        return cls(grid, ScalarField(grid, values))

    @property
    def phi(self) -> np.ndarray:
        return self.coefficient.values

    def is_zero(self) -> bool:
        return not np.any(self.phi)


@dataclass(frozen=True, eq=False)
class Tensor3Field:
    """A covariant 3-tensor per point, stored as ``values[..., k, i, j]``."""

    grid: GridSpec
    values: np.ndarray
    symmetric_tail: bool = field(default=False)

    def __post_init__(self) -> None:
        d = self.grid.dim
        values = np.array(self.values, dtype=float)
        self.grid.check(values, (d, d, d))
        if self.symmetric_tail:
            values = 0.5 * (values + np.swapaxes(values, -1, -2))
        if not np.all(np.isfinite(values)):
            raise ValueError("tensor field has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def make_metric(grid: GridSpec, matrix: np.ndarray, t: Optional[float] = None) -> MetricField:
    """Same as :meth:`MetricField.from_matrix`, with the time logged on failure."""
    try:
        return MetricField.from_matrix(grid, matrix)
    except DegenerateMetricError as e:
        if t is not None:
            logger.error("degenerate metric at t=%.6g: %s", t, e)
        raise
