"""Rectangular pixel grids, scalar/vector fields and the discrete calculus on them.

Conventions shared by the whole package:

* pixel centers at ``x_i = x_min + (i + 0.5) * hx`` (same in y),
* arrays are stored as ``(ny, nx)`` float64, row-major with y as the
  outer index,
* sampling outside the grid extent evaluates to 0 (zero extension),
* gradient/divergence use second-order central differences in the
  interior and first-order one-sided differences on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridMismatchError(ValueError):
    """Raised when two fields that must share a grid do not."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform pixel grid on the rectangle [x_min, x_max] x [y_min, y_max]."""

    nx: int
    ny: int
    x_min: float = -16.0
    x_max: float = 16.0
    y_min: float = -16.0
    y_max: float = 16.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs at least 2x2 pixels, got {self.nx}x{self.ny}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid extents must satisfy x_max > x_min and y_max > y_min")

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.hx

    def y_centers(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.hy

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-center coordinates as two (ny, nx) arrays (X, Y)."""
        return np.meshgrid(self.x_centers(), self.y_centers())


def _as_field(grid: Grid2D, values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != grid.shape:
        raise ValueError(f"field shape {arr.shape} does not match grid {grid.shape}")
    return arr


@dataclass
class ScalarImage:
    """A scalar function sampled at pixel centers."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = _as_field(self.grid, self.values)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "ScalarImage":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: Grid2D, value: float) -> "ScalarImage":
        return cls(grid, np.full(grid.shape, float(value)))

    def copy(self) -> "ScalarImage":
        return ScalarImage(self.grid, self.values.copy())


@dataclass
class VectorField2D:
    """A 2D vector field sampled at pixel centers (components vx, vy)."""

    grid: Grid2D
    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        self.vx = _as_field(self.grid, self.vx)
        self.vy = _as_field(self.grid, self.vy)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "VectorField2D":
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape))

    def copy(self) -> "VectorField2D":
        return VectorField2D(self.grid, self.vx.copy(), self.vy.copy())


@dataclass
class DisplacementMap:
    """The map x -> x + (dx, dy)(x); dx = dy = 0 is the identity."""

    grid: Grid2D
    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        self.dx = _as_field(self.grid, self.dx)
        self.dy = _as_field(self.grid, self.dy)

    @classmethod
    def identity(cls, grid: Grid2D) -> "DisplacementMap":
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape))


@dataclass
class TimeVelocityField:
    """N+1 time samples of a velocity field, sample i at time t_i = i/N."""

    fields: list[VectorField2D] = field(default_factory=list)

    def __post_init__(self):
        if len(self.fields) < 2:
            raise ValueError("need at least 2 time samples (n_steps >= 1)")
        g = self.fields[0].grid
        for f in self.fields[1:]:
            if f.grid != g:
                raise GridMismatchError("all time samples must share one grid")

    @property
    def n_steps(self) -> int:
        return len(self.fields) - 1

    @property
    def grid(self) -> Grid2D:
        return self.fields[0].grid

    @classmethod
    def zeros(cls, grid: Grid2D, n_steps: int) -> "TimeVelocityField":
        return cls([VectorField2D.zeros(grid) for _ in range(n_steps + 1)])

    def copy(self) -> "TimeVelocityField":
        return TimeVelocityField([f.copy() for f in self.fields])


def interp_values(grid: Grid2D, values: np.ndarray, xq: np.ndarray, yq: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of pixel-center samples at physical points.

    Points outside the extent see zeros: any of the four neighbouring
    pixel centers that falls off the grid contributes 0.
    """
    fx = (xq - grid.x_min) / grid.hx - 0.5
    fy = (yq - grid.y_min) / grid.hy - 0.5
    ix = np.floor(fx).astype(np.intp)
    iy = np.floor(fy).astype(np.intp)
    tx = fx - ix
    ty = fy - iy

    nx, ny = grid.nx, grid.ny
    flat = values.ravel()
    out = np.zeros(np.broadcast(xq, yq).shape, dtype=np.float64)
    for dy_ in (0, 1):
        wy = ty if dy_ else 1.0 - ty
        jy = iy + dy_
        my = (jy >= 0) & (jy < ny)
        for dx_ in (0, 1):
            wx = tx if dx_ else 1.0 - tx
            jx = ix + dx_
            m = my & (jx >= 0) & (jx < nx)
            w = wx * wy
            idx = np.where(m, jy * nx + jx, 0)
            out += np.where(m, w * flat[idx], 0.0)
    return out


def sample_bilinear(img: ScalarImage, points: DisplacementMap) -> ScalarImage:
    """Sample ``img`` at x + (dx, dy)(x) for every pixel center x."""
    if img.grid != points.grid:
        raise GridMismatchError("image and displacement map live on different grids")
    X, Y = img.grid.meshgrid()
    vals = interp_values(img.grid, img.values, X + points.dx, Y + points.dy)
    return ScalarImage(img.grid, vals)


def gradient(img: ScalarImage) -> VectorField2D:
    """Finite-difference spatial gradient (central interior, one-sided edges)."""
    ddy, ddx = np.gradient(img.values, img.grid.hy, img.grid.hx, edge_order=1)
    return VectorField2D(img.grid, ddx, ddy)


def divergence(vf: VectorField2D) -> ScalarImage:
    """div v = dvx/dx + dvy/dy with the same difference scheme as gradient."""
    ddx = np.gradient(vf.vx, vf.grid.hx, axis=1, edge_order=1)
    ddy = np.gradient(vf.vy, vf.grid.hy, axis=0, edge_order=1)
    return ScalarImage(vf.grid, ddx + ddy)


def integrate(img: ScalarImage) -> float:
    """Midpoint-rule integral: sum of values times the pixel area."""
    return float(np.sum(img.values) * img.grid.cell_area)
