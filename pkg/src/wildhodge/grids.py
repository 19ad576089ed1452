"""Polar quadrature grids on annuli and matrix-valued fields sampled on them.

Radii are geometric (uniform in t = log r) so power-law behaviour near the
puncture is resolved at constant relative cost; angles are uniform. Cell
boundaries sit at geometric means of adjacent radii, so the cell areas tile
the annulus exactly and the quadrature weights sum to its area by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

FIELD_KINDS = ("function", "dz", "dzbar", "mixed")


@dataclass(frozen=True, eq=False)
class DiskGrid:
    """Geometric-radial, uniform-angular grid on the annulus r_min..r_max."""

    r_min: float
    r_max: float
    n_r: int
    n_theta: int
    radii: np.ndarray = field(init=False)
    angles: np.ndarray = field(init=False)
    edges: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.r_min < self.r_max <= 1.0:
            raise InputError(f"need 0 < r_min < r_max <= 1, got [{self.r_min}, {self.r_max}]")
        if self.n_r < 4 or self.n_theta < 4:
            raise InputError("need at least 4 nodes in each direction")
        radii = np.geomspace(self.r_min, self.r_max, self.n_r)
        angles = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        edges = np.empty(self.n_r + 1)
        edges[0] = self.r_min
        edges[-1] = self.r_max
        edges[1:-1] = np.sqrt(radii[:-1] * radii[1:])
        ring_area = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2)
        weights = np.repeat(
            ring_area[:, None] * (2.0 * np.pi / self.n_theta), self.n_theta, axis=1
        )
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)

    @property
    def shape(self) -> tuple:
        return (self.n_r, self.n_theta)

    @property
    def h_t(self) -> float:
        """Step in t = log r."""
        return math.log(self.r_max / self.r_min) / (self.n_r - 1)

    @property
    def h_theta(self) -> float:
        return 2.0 * math.pi / self.n_theta

    def nodes(self) -> np.ndarray:
        """Complex node positions, shape (n_r, n_theta)."""
        return self.radii[:, None] * np.exp(1j * self.angles[None, :])

    def refined(self, factor: int = 2) -> "DiskGrid":
        return DiskGrid(self.r_min, self.r_max, factor * self.n_r, factor * self.n_theta)

    def area(self) -> float:
        return math.pi * (self.r_max**2 - self.r_min**2)


@dataclass(frozen=True, eq=False)
class GridField:
    """Matrix-valued field or 1-form sampled at every grid node.

    kind 'function', 'dz', 'dzbar': values shape (n_r, n_theta, r, r).
    kind 'mixed': values shape (2, n_r, n_theta, r, r), dz component first.
    """

    grid: DiskGrid
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise InputError(f"unknown field kind {self.kind!r}")
        values = np.asarray(self.values, dtype=complex)
        base = self.grid.shape
        if self.kind == "mixed":
            ok = values.ndim == 5 and values.shape[0] == 2 and values.shape[1:3] == base
        else:
            ok = values.ndim == 4 and values.shape[0:2] == base
        if not ok or values.shape[-1] != values.shape[-2]:
            raise InputError(f"value shape {values.shape} does not match kind {self.kind}")
        object.__setattr__(self, "values", values)

    @property
    def rank(self) -> int:
        return self.values.shape[-1]

    def dz_part(self) -> np.ndarray:
        """dz component as a node array, regardless of kind."""
        if self.kind == "dz":
            return self.values
        if self.kind == "mixed":
            return self.values[0]
        if self.kind == "dzbar":
            return np.zeros_like(self.values)
        raise InputError("a function has no dz component")

    def dzbar_part(self) -> np.ndarray:
        if self.kind == "dzbar":
            return self.values
        if self.kind == "mixed":
            return self.values[1]
        if self.kind == "dz":
            return np.zeros_like(self.values)
        raise InputError("a function has no dzbar component")

    def as_mixed(self) -> "GridField":
        if self.kind == "mixed":
            return self
        if self.kind == "function":
            raise InputError("cannot promote a function to a 1-form")
        return GridField(self.grid, "mixed", np.stack([self.dz_part(), self.dzbar_part()]))

    def __add__(self, other: "GridField") -> "GridField":
        if self.grid is not other.grid and self.grid.shape != other.grid.shape:
            raise InputError("fields live on different grids")
        if self.kind == other.kind:
            return GridField(self.grid, self.kind, self.values + other.values)
        if self.kind == "function" or other.kind == "function":
            raise InputError("cannot add a function to a 1-form")
        return GridField(
            self.grid, "mixed", self.as_mixed().values + other.as_mixed().values
        )

    def __sub__(self, other: "GridField") -> "GridField":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "GridField":
        return GridField(self.grid, self.kind, c * self.values)

    def __rmul__(self, c: complex) -> "GridField":
        return self.scale(c)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


def function_field(grid: DiskGrid, values: np.ndarray) -> GridField:
    return GridField(grid, "function", values)


def diag_embed(entry_values: np.ndarray) -> np.ndarray:
    """(..., r) per-entry values into (..., r, r) diagonal matrices."""
    entry_values = np.asarray(entry_values, dtype=complex)
    r = entry_values.shape[-1]
    out = np.zeros(entry_values.shape + (r,), dtype=complex)
    idx = np.arange(r)
    out[..., idx, idx] = entry_values
    return out
