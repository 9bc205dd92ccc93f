"""Structured grids and the discrete fields that live on them.

Values are stored as numpy arrays of shape ``(*grid.dims, *component_shape)``:
row-major node order with the last axis fastest, component index innermost.
Axis ``a`` of the array carries the coordinate ``x_{a+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Grid",
    "Box",
    "ScalarField",
    "VectorField",
    "MatrixField",
    "TwoFormField",
    "as_scalar",
    "as_vector",
    "as_matrix",
]


@dataclass(frozen=True)
class Grid:
    """Rectangular lattice in 2 or 3 dimensions.

    Parameters
    ----------
    dims : tuple of int
        Node count per axis, at least 3 each.
    origin : tuple of float
        Coordinates of node ``(0, ..., 0)``.
    spacing : tuple of float
        Step per axis, strictly positive.
    """

    dims: tuple[int, ...]
    origin: tuple[float, ...]
    spacing: tuple[float, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        origin = tuple(float(o) for o in self.origin)
        spacing = tuple(float(h) for h in self.spacing)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        if len(dims) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(dims)}")
        if not len(dims) == len(origin) == len(spacing):
            raise ValueError("dims, origin and spacing must have equal length")
        if min(dims) < 3:
            raise ValueError(f"need at least 3 nodes per axis, got {dims}")
        if min(spacing) <= 0:
            raise ValueError(f"spacing must be positive, got {spacing}")

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float], dims: Sequence[int]) -> "Grid":
        """Grid with ``dims`` nodes spanning ``[lo, hi]`` on every axis (endpoints included)."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        dims = tuple(int(d) for d in dims)
        spacing = (hi - lo) / (np.asarray(dims) - 1)
        return cls(dims, tuple(lo), tuple(spacing))

    @classmethod
    def uniform(cls, n: int, h: float, lo: float = 0.0, hi: float = 1.0) -> "Grid":
        """Cube ``[lo, hi]^n`` with step ``h`` (``(hi - lo) / h`` must be an integer)."""
        cells = int(round((hi - lo) / h))
        if not np.isclose(cells * h, hi - lo):
            raise ValueError(f"step {h} does not divide [{lo}, {hi}]")
        return cls.box([lo] * n, [hi] * n, [cells + 1] * n)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def h(self) -> float:
        """Largest step."""
        return max(self.spacing)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + h * (d - 1) for o, h, d in zip(self.origin, self.spacing, self.dims))

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(d) for o, h, d in zip(self.origin, self.spacing, self.dims)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(*dims, n)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def point(self, index: Sequence[int]) -> np.ndarray:
        return np.array([o + h * i for o, h, i in zip(self.origin, self.spacing, index)])

    def nearest_index(self, x: Sequence[float]) -> tuple[int, ...]:
        idx = np.rint((np.asarray(x, float) - self.origin) / self.spacing).astype(int)
        return tuple(int(np.clip(i, 0, d - 1)) for i, d in zip(idx, self.dims))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.dims, dtype=bool)
        for a in range(self.n):
            sl = [slice(None)] * self.n
            sl[a] = 0
            mask[tuple(sl)] = True
            sl[a] = -1
            mask[tuple(sl)] = True
        return mask

    def refine(self) -> "Grid":
        """Same box with the step halved."""
        return Grid(tuple(2 * d - 1 for d in self.dims), self.origin,
                    tuple(h / 2 for h in self.spacing))

    def sub(self, box: "Box") -> "Grid":
        """Grid of the nodes inside an index box."""
        box.check(self)
        return Grid(tuple(b - a for a, b in zip(box.lo, box.hi)), tuple(self.point(box.lo)),
                    self.spacing)

    def same_as(self, other: "Grid") -> bool:
        return (self.dims == other.dims
                and np.allclose(self.origin, other.origin, rtol=0, atol=1e-12)
                and np.allclose(self.spacing, other.spacing, rtol=1e-12, atol=0))

    def to_dict(self) -> dict:
        return {"n": self.n, "dims": list(self.dims), "origin": list(self.origin),
                "spacing": list(self.spacing)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        grid = cls(tuple(d["dims"]), tuple(d["origin"]), tuple(d["spacing"]))
        if "n" in d and int(d["n"]) != grid.n:
            raise ValueError("grid descriptor: n disagrees with dims")
        return grid


@dataclass(frozen=True)
class Box:
    """Axis-aligned index box ``[lo, hi)`` used as a reconstruction subdomain."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    @classmethod
    def interior(cls, grid: Grid, margin: int = 1) -> "Box":
        """Whole grid minus ``margin`` boundary layers (the default subdomain)."""
        return cls(tuple([margin] * grid.n), tuple(d - margin for d in grid.dims))

    @classmethod
    def full(cls, grid: Grid) -> "Box":
        return cls.interior(grid, 0)

    @classmethod
    def physical(cls, grid: Grid, lo: Sequence[float], hi: Sequence[float]) -> "Box":
        """Smallest index box containing the nodes inside ``[lo, hi]``."""
        axes = grid.axes()
        tol = 1e-9 * grid.h
        ilo = tuple(int(np.searchsorted(ax, l - tol)) for ax, l in zip(axes, lo))
        ihi = tuple(int(np.searchsorted(ax, u + tol, side="right")) for ax, u in zip(axes, hi))
        return cls(ilo, ihi)

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in zip(self.lo, self.hi))

    def contains(self, index: Sequence[int]) -> bool:
        return all(a <= i < b for a, i, b in zip(self.lo, index, self.hi))

    def check(self, grid: Grid) -> "Box":
        if len(self.lo) != grid.n or len(self.hi) != grid.n:
            raise ValueError("box dimension does not match grid")
        for a, b, d in zip(self.lo, self.hi, grid.dims):
            if not 0 <= a < b <= d:
                raise ValueError(f"box {self} does not fit grid dims {grid.dims}")
        return self


@dataclass(frozen=True)
class _Field:
    grid: Grid
    values: np.ndarray = field(repr=False)

    rank = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        expected = self.grid.dims + self._component_shape(self.grid.n)
        if values.shape != expected:
            raise ValueError(
                f"{type(self).__name__} expects shape {expected}, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @staticmethod
    def _component_shape(n: int) -> tuple[int, ...]:
        return ()

    @property
    def n(self) -> int:
        return self.grid.n

    def __getitem__(self, box: Box) -> np.ndarray:
        return self.values[box.slices]

    def restrict(self, box: Box):
        """The same field on ``grid.sub(box)``."""
        return type(self)(self.grid.sub(box), self.values[box.slices])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def with_values(self, values):
        return type(self)(self.grid, values)

    def sup(self, box: Box | None = None) -> float:
        v = self.values if box is None else self.values[box.slices]
        return float(np.max(np.abs(v)))


class ScalarField(_Field):
    pass


class VectorField(_Field):
    @staticmethod
    def _component_shape(n):
        return (n,)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[..., i])


class MatrixField(_Field):
    @staticmethod
    def _component_shape(n):
        return (n, n)

    def column(self, j: int) -> VectorField:
        return VectorField(self.grid, self.values[..., :, j])

    def transpose(self) -> "MatrixField":
        return MatrixField(self.grid, np.swapaxes(self.values, -1, -2))

    def asymmetry(self) -> float:
        """Largest entry of ``M - M^T`` over all nodes."""
        return float(np.max(np.abs(self.values - np.swapaxes(self.values, -1, -2))))

    @classmethod
    def from_columns(cls, columns: Sequence[VectorField]) -> "MatrixField":
        return cls(columns[0].grid, np.stack([c.values for c in columns], axis=-1))

    @classmethod
    def constant(cls, grid: Grid, m) -> "MatrixField":
        m = np.asarray(m, dtype=float)
        return cls(grid, np.broadcast_to(m, grid.dims + m.shape))


class TwoFormField(_Field):
    """Coefficients ``c_ij`` of ``sum_{i<j} c_ij e_i ^ e_j`` stored as a full antisymmetric matrix."""

    @staticmethod
    def _component_shape(n):
        return (n, n)

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
        if np.max(np.abs(v + np.swapaxes(v, -1, -2))) > 1e-12 * scale:
            raise ValueError("two-form coefficients must be antisymmetric")

    def coefficient(self, i: int, j: int) -> ScalarField:
        return ScalarField(self.grid, self.values[..., i, j])


def _check_grid(f, grid: Grid):
    if not f.grid.same_as(grid):
        raise ValueError("fields live on different grids")


def as_scalar(grid: Grid, fn) -> ScalarField:
    """Sample ``fn(x) -> scalar`` where ``x`` has shape ``(*dims, n)``."""
    return ScalarField(grid, fn(grid.coords()))


def as_vector(grid: Grid, fn) -> VectorField:
    return VectorField(grid, fn(grid.coords()))


def as_matrix(grid: Grid, fn) -> MatrixField:
    return MatrixField(grid, fn(grid.coords()))
