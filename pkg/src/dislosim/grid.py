"""Uniform Cartesian grids, scalar/indicator fields and elementary measures.

Fields are node-sampled (vertex-centered) on a square box
``[origin - A, origin + A]^dim`` with ``n`` nodes per axis and spacing
``h = 2A / (n - 1)``, identical on every axis.  Set measures are plain
counting sums ``h^dim * popcount``, which is the quadrature all tolerances
in the test suite are stated against.

All operations here are pure functions of their inputs; fields are treated
as immutable values (mutating ``values`` in place is never done internally).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, GridMismatchError


@dataclass(frozen=True)
class Grid:
    """Uniform vertex-centered grid on a square box.

    dim: 1 or 2.
    origin: box center, one coordinate per axis.
    extent: half-width A; the box is [origin - A, origin + A] per axis.
    n: nodes per axis (shared by all axes).
    """

    dim: int
    origin: tuple[float, ...]
    extent: float
    n: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 3:
            raise ConfigurationError(f"n must be >= 3, got {self.n}")
        if self.extent <= 0:
            raise ConfigurationError(f"extent must be > 0, got {self.extent}")
        if len(self.origin) != self.dim:
            raise ConfigurationError(
                f"origin has {len(self.origin)} coordinates, expected {self.dim}"
            )

    @property
    def h(self) -> float:
        return 2.0 * self.extent / (self.n - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def num_nodes(self) -> int:
        return self.n**self.dim

    def axis(self, k: int) -> np.ndarray:
        """Node coordinates along axis k."""
        return self.origin[k] - self.extent + self.h * np.arange(self.n)

    def coords(self) -> np.ndarray:
        """Stacked node coordinates, shape (dim, n) in 1-D or (dim, n, n) in 2-D."""
        if self.dim == 1:
            return self.axis(0)[np.newaxis, :]
        xs = np.meshgrid(self.axis(0), self.axis(1), indexing="ij")
        return np.stack(xs)

    def radius(self) -> np.ndarray:
        """Euclidean distance of every node from the box center."""
        c = self.coords() - np.asarray(self.origin).reshape((self.dim,) + (1,) * self.dim)
        return np.sqrt((c**2).sum(axis=0))

    def collar_mask(self, width: int = 1) -> np.ndarray:
        """Boolean mask of the outermost `width` node rings."""
        mask = np.zeros(self.shape, dtype=bool)
        if width <= 0:
            return mask
        w = min(width, self.n)
        for ax in range(self.dim):
            sl: list[slice] = [slice(None)] * self.dim
            sl[ax] = slice(0, w)
            mask[tuple(sl)] = True
            sl[ax] = slice(self.n - w, self.n)
            mask[tuple(sl)] = True
        return mask


@dataclass
class ScalarField:
    """A scalar sampled at grid nodes, with a time stamp.

    Solver-produced level-set fields stay in [-1, 1]; derived fields such as
    arrival times may hold +inf sentinels, so finiteness is asserted where
    fields are produced, not here.
    """

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"values shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.time)

    def with_values(self, values: np.ndarray, time: float | None = None) -> "ScalarField":
        return ScalarField(self.grid, values, self.time if time is None else time)


@dataclass
class IndicatorField:
    """A {0,1}-valued field marking a node set."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.shape != self.grid.shape:
            raise ConfigurationError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        uniq = np.unique(vals)
        if not np.all(np.isin(uniq, (0, 1))):
            raise ConfigurationError("indicator entries must be exactly 0 or 1")
        self.values = vals.astype(np.uint8)


# ---------------------------------------------------------------------------
# initial data shapes


@dataclass(frozen=True)
class Interval:
    """1-D segment [a, b]."""

    a: float
    b: float

    def signed_distance(self, coords: np.ndarray) -> np.ndarray:
        x = coords[0]
        return np.minimum(x - self.a, self.b - x)

    def required_extent(self, origin: Sequence[float], margin: float) -> float:
        return max(abs(self.a - origin[0]), abs(self.b - origin[0])) + 1.0 + margin


@dataclass(frozen=True)
class Disk:
    """Disk (2-D) or symmetric interval (1-D) of given center and radius."""

    center: tuple[float, ...]
    radius: float

    def signed_distance(self, coords: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center).reshape((len(self.center),) + (1,) * (coords.ndim - 1))
        return self.radius - np.sqrt(((coords - c) ** 2).sum(axis=0))

    def required_extent(self, origin: Sequence[float], margin: float) -> float:
        off = max(abs(c - o) for c, o in zip(self.center, origin))
        return off + self.radius + 1.0 + margin


@dataclass(frozen=True)
class DiskUnion:
    """Union of disks; signed distance is the max over members."""

    disks: tuple[Disk, ...]

    def signed_distance(self, coords: np.ndarray) -> np.ndarray:
        return np.max([d.signed_distance(coords) for d in self.disks], axis=0)

    def required_extent(self, origin: Sequence[float], margin: float) -> float:
        return max(d.required_extent(origin, margin) for d in self.disks)


ShapeSpec = Interval | Disk | DiskUnion | Callable[[np.ndarray], np.ndarray]


def make_signed_initial(grid: Grid, shape: ShapeSpec, margin: float = 0.0) -> ScalarField:
    """Clamped signed-distance initial data for a front shape.

    Returns u0 = max(-1, min(1, sd(shape))) so that -1 <= u0 <= 1, u0 has
    Lipschitz constant <= 1 at grid resolution and u0 == -1 on a collar of
    physical width `margin` next to the box boundary.  `margin` should cover
    the planned front growth (speed bound times horizon).
    """
    coords = grid.coords()
    if callable(shape) and not isinstance(shape, (Interval, Disk, DiskUnion)):
        sd = np.asarray(shape(coords), dtype=np.float64)
        if sd.shape != grid.shape:
            raise ConfigurationError(
                f"shape callable returned {sd.shape}, expected {grid.shape}"
            )
    else:
        need = shape.required_extent(grid.origin, margin)
        if need > grid.extent + 1e-12:
            raise ConfigurationError(
                f"shape does not fit the box with margin {margin}: "
                f"requires extent >= {need:.6g}, grid has {grid.extent:.6g}"
            )
        sd = shape.signed_distance(coords)
    u0 = np.clip(sd, -1.0, 1.0)

    if margin > 0:
        width = int(np.ceil(margin / grid.h))
        collar = grid.collar_mask(width)
        if np.any(u0[collar] > -1.0):
            worst = float(u0[collar].max())
            raise ConfigurationError(
                f"initial data is not -1 on the boundary collar of width {margin:.6g} "
                f"(max collar value {worst:.3g}); enlarge the grid extent"
            )
    return ScalarField(grid, u0, 0.0)


def superlevel_indicator(f: ScalarField, level: float, strict: bool = False) -> IndicatorField:
    """Indicator of {f >= level} (strict=False) or {f > level} (strict=True)."""
    if strict:
        vals = f.values > level
    else:
        vals = f.values >= level
    return IndicatorField(f.grid, vals.astype(np.uint8))


def lebesgue_measure(ind: IndicatorField) -> float:
    """Riemann-sum measure h^dim * (count of ones)."""
    return float(ind.grid.h ** ind.grid.dim * int(ind.values.sum()))


def sup_distance(a: ScalarField, b: ScalarField) -> float:
    """Sup norm of a - b over nodes; the two fields must share a grid."""
    if a.grid != b.grid:
        raise GridMismatchError("sup_distance requires fields on the same grid")
    return float(np.max(np.abs(a.values - b.values)))


def discrete_lipschitz(f: ScalarField) -> float:
    """Max absolute adjacent-node difference divided by h, over all axes."""
    vals = f.values
    h = f.grid.h
    best = 0.0
    for ax in range(f.grid.dim):
        d = np.abs(np.diff(vals, axis=ax))
        if d.size:
            best = max(best, float(d.max()) / h)
    return best
