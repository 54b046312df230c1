"""Scalar B-spline kernels and tensor-product stencils.

Velocity uses the multiquadratic kernel on cell centers (3x3 stencil in 2D),
pressure the multilinear hat on grid nodes (2x2 stencil). Offsets are
grid-normalized: eta = (x - x_i) / dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelSample",
    "StencilWeights2D",
    "DomainError",
    "quad_kernel",
    "lin_kernel",
    "velocity_stencil",
    "pressure_stencil",
    "quad_base_index",
    "lin_base_index",
]


class DomainError(ValueError):
    """Raised when a position falls outside the interpolatable region."""


@dataclass(frozen=True)
class KernelSample:
    value: float
    derivative: float  # per unit grid-normalized offset


@dataclass(frozen=True)
class StencilWeights2D:
    """Tensor-product weights around base_index.

    weights[a, b] multiplies the coefficient at base_index + (a, b) - lo,
    where lo = 1 for the quadratic stencil (3x3, offsets -1..1) and 0 for
    the linear stencil (2x2, offsets 0..1). gradients[a, b] is the spatial
    gradient of that weight (per unit length, i.e. divided by dx).
    """

    base_index: tuple[int, int]
    weights: np.ndarray
    gradients: np.ndarray


def quad_kernel(eta: float) -> KernelSample:
    """Quadratic B-spline, support (-3/2, 3/2), C1 everywhere.

    Branch intervals are half-open exactly as the piecewise definition is
    printed; shared knots land in the branch whose closed end holds them.
    """
    if -1.5 < eta < -0.5:
        return KernelSample(0.5 * (eta + 1.5) ** 2, eta + 1.5)
    if -0.5 <= eta <= 0.5:
        return KernelSample(0.75 - eta * eta, -2.0 * eta)
    if 0.5 < eta < 1.5:
        return KernelSample(0.5 * (eta - 1.5) ** 2, eta - 1.5)
    return KernelSample(0.0, 0.0)


def lin_kernel(nu: float) -> KernelSample:
    """Multilinear hat, support (-1, 1). Derivative is the branch slope."""
    if -1.0 < nu < 0.0:
        return KernelSample(1.0 + nu, 1.0)
    if 0.0 <= nu < 1.0:
        return KernelSample(1.0 - nu, -1.0)
    return KernelSample(0.0, 0.0)


def quad_base_index(xi: float) -> int:
    """Nearest cell-center index for continuous coordinate xi.

    Ties at exact half-offsets round toward -inf, so xi - base stays in
    (-1/2, 1/2].
    """
    return int(math.ceil(xi - 0.5))


def lin_base_index(zeta: float) -> int:
    return int(math.floor(zeta))


def velocity_stencil(x, grid) -> StencilWeights2D:
    """3x3 quadratic stencil weights N_i(x) and gradients at position x.

    Requires every stencil cell to exist; raises DomainError naming the
    offending axis otherwise.
    """
    base = []
    vals = []
    ders = []
    for axis in range(2):
        xi = (x[axis] - grid.origin[axis]) / grid.dx - 0.5
        b = quad_base_index(xi)
        if b < 1 or b > grid.cells[axis] - 2:
            raise DomainError(
                f"position {x[axis]!r} outside interpolatable region on axis {axis}"
            )
        samples = [quad_kernel(xi - (b + k)) for k in (-1, 0, 1)]
        base.append(b)
        vals.append([s.value for s in samples])
        ders.append([s.derivative for s in samples])
    vx, vy = np.asarray(vals[0]), np.asarray(vals[1])
    dx_, dy_ = np.asarray(ders[0]), np.asarray(ders[1])
    weights = np.outer(vx, vy)
    gradients = np.empty((3, 3, 2))
    gradients[:, :, 0] = np.outer(dx_, vy) / grid.dx
    gradients[:, :, 1] = np.outer(vx, dy_) / grid.dx
    return StencilWeights2D((base[0] - 1, base[1] - 1), weights, gradients)


def pressure_stencil(x, grid) -> StencilWeights2D:
    """2x2 multilinear stencil on grid nodes.

    The node domain is the closed grid box; the top edge clamps to the last
    cell so the boundary node keeps weight one.
    """
    base = []
    vals = []
    ders = []
    for axis in range(2):
        zeta = (x[axis] - grid.origin[axis]) / grid.dx
        if zeta < 0.0 or zeta > grid.cells[axis]:
            raise DomainError(
                f"position {x[axis]!r} outside grid node domain on axis {axis}"
            )
        b = min(lin_base_index(zeta), grid.cells[axis] - 1)
        samples = [lin_kernel(zeta - (b + k)) for k in (0, 1)]
        base.append(b)
        vals.append([s.value for s in samples])
        ders.append([s.derivative for s in samples])
    vx, vy = np.asarray(vals[0]), np.asarray(vals[1])
    dx_, dy_ = np.asarray(ders[0]), np.asarray(ders[1])
    weights = np.outer(vx, vy)
    gradients = np.empty((2, 2, 2))
    gradients[:, :, 0] = np.outer(dx_, vy) / grid.dx
    gradients[:, :, 1] = np.outer(vx, dy_) / grid.dx
    return StencilWeights2D((base[0], base[1]), weights, gradients)
