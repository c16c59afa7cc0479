"""Node-sampled scalar fields on uniform square grids.

Fields store values at grid nodes; gradients live on cells and are formed
from the four corner nodes, so an affine field has an exactly constant
cell gradient.  Integrals over balls, squares and annuli are cell sums
with 4x4 subsampling of the cells cut by the region boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np


class RegionOutsideGrid(ValueError):
    """A query region (ball, square, circle) is not covered by the grid."""


@dataclass(frozen=True)
class ScalarField2D:
    origin: tuple[float, float]
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or min(vals.shape) < 2:
            raise ValueError(f"need a 2D array with at least 2 nodes per side, got {vals.shape}")
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_function(cls, f: Callable, origin, h: float, shape) -> "ScalarField2D":
        """Sample ``f(x, y)`` (vectorized) at the nodes of a grid."""
        nx, ny = shape
        x = origin[0] + h * np.arange(nx)
        y = origin[1] + h * np.arange(ny)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return cls(origin, h, np.broadcast_to(f(X, Y), (nx, ny)))

    @classmethod
    def on_square(cls, f: Callable, center=(0.0, 0.0), half_side: float = 1.0, n: int = 256):
        """Sample ``f`` on the square of given center and half-side with ``n`` cells per side."""
        h = 2.0 * half_side / n
        origin = (center[0] - half_side, center[1] - half_side)
        return cls.from_function(f, origin, h, (n + 1, n + 1))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return x0, x0 + self.h * (self.nx - 1), y0, y0 + self.h * (self.ny - 1)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        xc = self.x[:-1] + 0.5 * self.h
        yc = self.y[:-1] + 0.5 * self.h
        return np.meshgrid(xc, yc, indexing="ij")

    def with_values(self, values) -> "ScalarField2D":
        return ScalarField2D(self.origin, self.h, values)

    def positive_part(self) -> "ScalarField2D":
        return self.with_values(np.maximum(self.values, 0.0))

    def negative_part(self) -> "ScalarField2D":
        return self.with_values(np.maximum(-self.values, 0.0))

    def contains(self, x, y, pad: float = 0.0) -> bool:
        xmin, xmax, ymin, ymax = self.bounds
        tol = 1e-12 * max(1.0, abs(xmax), abs(ymax), abs(xmin), abs(ymin))
        x = np.asarray(x)
        y = np.asarray(y)
        return bool(
            np.all(x - pad >= xmin - tol) and np.all(x + pad <= xmax + tol)
            and np.all(y - pad >= ymin - tol) and np.all(y + pad <= ymax + tol)
        )

    def interpolate(self, x, y, clamp: bool = False) -> np.ndarray:
        """Bilinear interpolation at arbitrary points.

        Points outside the grid raise ``RegionOutsideGrid`` unless ``clamp``
        is set, in which case they are projected onto the grid square.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not clamp and not self.contains(x, y):
            raise RegionOutsideGrid("interpolation point outside grid")
        fx = np.clip((x - self.origin[0]) / self.h, 0.0, self.nx - 1)
        fy = np.clip((y - self.origin[1]) / self.h, 0.0, self.ny - 1)
        i = np.minimum(np.floor(fx).astype(int), self.nx - 2)
        j = np.minimum(np.floor(fy).astype(int), self.ny - 2)
        tx = fx - i
        ty = fy - j
        v = self.values
        return ((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
                + (1 - tx) * ty * v[i, j + 1] + tx * ty * v[i + 1, j + 1])

    # -- serialization -------------------------------------------------
    def header(self) -> dict:
        return {"origin": list(self.origin), "h": self.h, "nx": self.nx, "ny": self.ny}

    def to_csv(self, path) -> tuple[Path, Path]:
        """Write ``x,y,value`` rows plus a JSON header next to the CSV."""
        path = Path(path)
        X, Y = self.nodes()
        data = np.column_stack([X.ravel(), Y.ravel(), self.values.ravel()])
        np.savetxt(path, data, delimiter=",", header="x,y,value", comments="", fmt="%.17g")
        hpath = path.with_suffix(".json")
        hpath.write_text(json.dumps(self.header(), indent=2) + "\n")
        return path, hpath

    @classmethod
    def from_csv(cls, path) -> "ScalarField2D":
        path = Path(path)
        hpath = path.with_suffix(".json")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if hpath.exists():
            hdr = json.loads(hpath.read_text())
            nx, ny, h, origin = hdr["nx"], hdr["ny"], hdr["h"], tuple(hdr["origin"])
        else:
            xs = np.unique(data[:, 0])
            ys = np.unique(data[:, 1])
            nx, ny = len(xs), len(ys)
            h = float(xs[1] - xs[0])
            origin = (float(xs[0]), float(ys[0]))
        if data.shape[0] != nx * ny:
            raise ValueError(f"{path}: expected {nx * ny} rows, found {data.shape[0]}")
        return cls(origin, h, data[:, 2].reshape(nx, ny))


def gradient_field(u: ScalarField2D) -> tuple[np.ndarray, np.ndarray]:
    """Cell gradients ``(gx, gy)``, each of shape ``(nx-1, ny-1)``."""
    v = u.values
    a, b = v[:-1, :-1], v[1:, :-1]
    c, d = v[:-1, 1:], v[1:, 1:]
    gx = (b + d - a - c) / (2.0 * u.h)
    gy = (c + d - a - b) / (2.0 * u.h)
    return gx, gy


def gradient_norm(u: ScalarField2D) -> np.ndarray:
    gx, gy = gradient_field(u)
    return np.hypot(gx, gy)


def cell_average(values: np.ndarray) -> np.ndarray:
    """Average of the four corner node values of every cell."""
    return 0.25 * (values[:-1, :-1] + values[1:, :-1] + values[:-1, 1:] + values[1:, 1:])


@dataclass(frozen=True)
class Region:
    """A ball, axis-aligned square or annulus in the plane."""

    kind: str
    center: tuple[float, float]
    size: float
    inner: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ball", "square", "annulus"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if not self.size > 0:
            raise ValueError("region radius / half-side must be positive")
        if self.kind == "annulus" and not 0 < self.inner < self.size:
            raise ValueError("annulus needs 0 < r_in < r_out")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @classmethod
    def ball(cls, center, r: float) -> "Region":
        return cls("ball", tuple(center), r)

    @classmethod
    def square(cls, center, half_side: float) -> "Region":
        return cls("square", tuple(center), half_side)

    @classmethod
    def annulus(cls, center, r_in: float, r_out: float) -> "Region":
        return cls("annulus", tuple(center), r_out, r_in)

    def contains(self, x, y) -> np.ndarray:
        dx = np.asarray(x) - self.center[0]
        dy = np.asarray(y) - self.center[1]
        if self.kind == "square":
            return (np.abs(dx) <= self.size) & (np.abs(dy) <= self.size)
        r2 = dx * dx + dy * dy
        inside = r2 <= self.size ** 2
        if self.kind == "annulus":
            inside &= r2 >= self.inner ** 2
        return inside

    def area(self) -> float:
        if self.kind == "square":
            return 4.0 * self.size ** 2
        if self.kind == "ball":
            return np.pi * self.size ** 2
        return np.pi * (self.size ** 2 - self.inner ** 2)


_SUB = 4
_SUB_OFFSETS = (np.arange(_SUB) + 0.5) / _SUB - 0.5


def _check_inside(grid: ScalarField2D, region: Region):
    cx, cy = region.center
    s = region.size
    if not grid.contains([cx - s, cx + s], [cy - s, cy + s]):
        raise RegionOutsideGrid(f"{region.kind} at {region.center} with size {s} leaves the grid")


def cell_fraction(grid: ScalarField2D, region: Region) -> np.ndarray:
    """Fraction of every cell lying inside ``region`` (shape ``(nx-1, ny-1)``)."""
    _check_inside(grid, region)
    if region.kind == "annulus":
        outer = Region.ball(region.center, region.size)
        inner = Region.ball(region.center, region.inner)
        return cell_fraction(grid, outer) - cell_fraction(grid, inner)
    h = grid.h
    X, Y = grid.cell_centers()
    frac = np.zeros(X.shape)
    if region.kind == "square":
        # sup-norm distance from the region center to the cell center
        dist = np.maximum(np.abs(X - region.center[0]), np.abs(Y - region.center[1]))
        tol = 1e-9 * h
        full = dist + 0.5 * h <= region.size + tol
        cut = ~full & (dist - 0.5 * h < region.size - tol)
    else:
        d = np.hypot(X - region.center[0], Y - region.center[1])
        half_diag = h / np.sqrt(2.0)
        full = d + half_diag <= region.size
        cut = ~full & (d - half_diag < region.size)
    frac[full] = 1.0
    if np.any(cut):
        xs = X[cut][:, None, None] + h * _SUB_OFFSETS[None, :, None]
        ys = Y[cut][:, None, None] + h * _SUB_OFFSETS[None, None, :]
        frac[cut] = region.contains(xs, ys).mean(axis=(1, 2))
    return frac


def region_integral(f: np.ndarray, grid: ScalarField2D, region: Region) -> float:
    """Integral of a cellwise function ``f`` over ``region``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.nx - 1, grid.ny - 1):
        raise ValueError(f"cellwise integrand must have shape {(grid.nx - 1, grid.ny - 1)}, got {f.shape}")
    frac = cell_fraction(grid, region)
    mask = frac > 0
    return float(np.sum(f[mask] * frac[mask]) * grid.h ** 2)


def sphere_average(u: ScalarField2D, x0, r: float, m: int = 256) -> float:
    """Mean of ``u`` over the circle of radius ``r`` about ``x0``."""
    if m < 64:
        raise ValueError("sphere_average needs at least 64 samples")
    if not r > 0:
        raise ValueError("radius must be positive")
    if not u.contains([x0[0] - r, x0[0] + r], [x0[1] - r, x0[1] + r]):
        raise RegionOutsideGrid(f"circle of radius {r} about {tuple(x0)} leaves the grid")
    theta = 2.0 * np.pi * np.arange(m) / m
    vals = u.interpolate(x0[0] + r * np.cos(theta), x0[1] + r * np.sin(theta), clamp=True)
    return float(vals.mean())
