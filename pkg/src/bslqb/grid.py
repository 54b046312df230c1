"""Collocated grid containers and field evaluation.

Velocity coefficients sit at cell centers and are evaluated with the
multiquadratic basis; pressures sit at grid nodes with the multilinear
basis. Coefficients are not nodal values: u(x_i) generally differs from
the coefficient stored at x_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .splines import DomainError, pressure_stencil

__all__ = ["GridDesc", "VelocityField", "PressureField", "DomainError"]


@dataclass(frozen=True)
class GridDesc:
    cells: tuple[int, int]
    dx: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if min(self.cells) < 4:
            raise ValueError("grid needs at least 4 cells per axis")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    @property
    def node_counts(self) -> tuple[int, int]:
        return (self.cells[0] + 1, self.cells[1] + 1)

    def cell_center_points(self) -> np.ndarray:
        """All cell centers, shape (nx*ny, 2), x-major."""
        return kernels.cell_centers(
            self.origin[0], self.origin[1], self.dx, self.cells[0], self.cells[1]
        )

    def node_points(self) -> np.ndarray:
        mx, my = self.node_counts
        gx = self.origin[0] + np.arange(mx) * self.dx
        gy = self.origin[1] + np.arange(my) * self.dx
        pts = np.empty((mx * my, 2))
        pts[:, 0] = np.repeat(gx, my)
        pts[:, 1] = np.tile(gy, mx)
        return pts

    def cell_center(self, i: int, j: int) -> np.ndarray:
        return np.array(
            [
                self.origin[0] + (i + 0.5) * self.dx,
                self.origin[1] + (j + 0.5) * self.dx,
            ]
        )

    def interp_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Open lower / closed upper corner of the interpolatable region."""
        lo = np.array(self.origin) + self.dx
        hi = np.array(self.origin) + (np.array(self.cells) - 1) * self.dx
        return lo, hi

    def clamp_to_interpolatable(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = self.interp_bounds()
        return np.clip(pts, lo + 1e-9 * self.dx, hi)


@dataclass
class VelocityField:
    grid: GridDesc
    coeffs: np.ndarray = None  # (nx, ny, 2)

    def __post_init__(self):
        nx, ny = self.grid.cells
        if self.coeffs is None:
            self.coeffs = np.zeros((nx, ny, 2))
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (nx, ny, 2):
            raise ValueError(f"coefficient shape {self.coeffs.shape} != {(nx, ny, 2)}")

    def copy(self) -> "VelocityField":
        return VelocityField(self.grid, self.coeffs.copy())

    def eval(self, pts: np.ndarray, clamp: bool = False) -> np.ndarray:
        """Interpolated velocity at pts, shape (N, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        g = self.grid
        return kernels.eval_velocity(
            self.coeffs, g.origin[0], g.origin[1], g.dx, pts, clamp
        )

    def eval_grad(self, pts: np.ndarray, clamp: bool = False):
        """(values (N,2), gradients (N,2,2)); grad[n,a,b] = du_a/dx_b."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        g = self.grid
        return kernels.eval_velocity_grad(
            self.coeffs, g.origin[0], g.origin[1], g.dx, pts, clamp
        )

    def max_speed(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0


@dataclass
class PressureField:
    grid: GridDesc
    values: np.ndarray = None  # (nx+1, ny+1)

    def __post_init__(self):
        mx, my = self.grid.node_counts
        if self.values is None:
            self.values = np.zeros((mx, my))
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (mx, my):
            raise ValueError(f"nodal shape {self.values.shape} != {(mx, my)}")

    def eval(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        g = self.grid
        # range check mirrors pressure_stencil, then sample clamped
        for axis in range(2):
            z = (pts[:, axis] - g.origin[axis]) / g.dx
            if np.any((z < 0) | (z > g.cells[axis])):
                raise DomainError(f"position outside grid node domain on axis {axis}")
        return kernels.sample_linear(self.values, g.origin[0], g.origin[1], g.dx, pts)


def eval_velocity(f: VelocityField, x) -> np.ndarray:
    """Single-point convenience wrapper, raises DomainError off-region."""
    return f.eval(np.asarray(x, dtype=np.float64).reshape(1, 2))[0]


def eval_velocity_gradient(f: VelocityField, x) -> np.ndarray:
    _, g = f.eval_grad(np.asarray(x, dtype=np.float64).reshape(1, 2))
    return g[0]


def eval_pressure(f: PressureField, x) -> float:
    return float(f.eval(np.asarray(x, dtype=np.float64).reshape(1, 2))[0])
