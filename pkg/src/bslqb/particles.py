"""Affine particle-in-cell transfers and the hybrid particle/grid blend.

Particles carry an affine local velocity (value v_p plus gradient C_p).
P2G forms mass-weighted averages of the affine evaluations at stencil
centers; coefficients whose accumulated stencil mass stays at or below the
threshold keep the grid (BSLQB) value instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import GridDesc, VelocityField


@dataclass(frozen=True)
class HybridParams:
    tau_m: float
    band_width: float = 0.0

    def __post_init__(self):
        if not self.tau_m > 0:
            raise ValueError("tau_m must be positive")


@dataclass
class ParticleSet:
    x: np.ndarray  # (n, 2)
    m: np.ndarray  # (n,)
    v: np.ndarray  # (n, 2)
    C: np.ndarray  # (n, 2, 2) affine velocity coefficients

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64).reshape(-1, 2)
        n = len(self.x)
        self.m = np.ascontiguousarray(self.m, dtype=np.float64).reshape(n)
        self.v = np.ascontiguousarray(self.v, dtype=np.float64).reshape(n, 2)
        self.C = np.ascontiguousarray(self.C, dtype=np.float64).reshape(n, 2, 2)
        if n and not np.all(self.m > 0):
            raise ValueError("particle masses must be positive")

    @staticmethod
    def empty() -> "ParticleSet":
        return ParticleSet(
            np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)), np.zeros((0, 2, 2))
        )

    def __len__(self):
        return len(self.x)

    def copy(self) -> "ParticleSet":
        return ParticleSet(self.x.copy(), self.m.copy(), self.v.copy(), self.C.copy())

    def select(self, mask) -> "ParticleSet":
        return ParticleSet(self.x[mask], self.m[mask], self.v[mask], self.C[mask])

    def cell_indices(self, grid: GridDesc) -> np.ndarray:
        z = (self.x - np.array(grid.origin)) / grid.dx
        return np.floor(z).astype(np.int64)

    def cell_mask(self, grid: GridDesc) -> np.ndarray:
        """Boolean (nx, ny) mask of cells containing at least one particle."""
        nx, ny = grid.cells
        mask = np.zeros((nx, ny), dtype=bool)
        if len(self):
            idx = self.cell_indices(grid)
            ok = (
                (idx[:, 0] >= 0)
                & (idx[:, 0] < nx)
                & (idx[:, 1] >= 0)
                & (idx[:, 1] < ny)
            )
            mask[idx[ok, 0], idx[ok, 1]] = True
        return mask


def advect_particles(ps: ParticleSet, dt: float, grid: GridDesc) -> ParticleSet:
    """x += dt v, clamped to the interpolatable region of the grid."""
    out = ps.copy()
    out.x = grid.clamp_to_interpolatable(ps.x + dt * ps.v)
    return out


def p2g_blend(ps: ParticleSet, bsl_field: VelocityField,
              params: HybridParams):
    """Hybrid transfer: particle-averaged coefficients where stencil mass
    exceeds tau_m, the BSLQB coefficients elsewhere.

    Returns (VelocityField, used_particles mask).
    """
    g = bsl_field.grid
    nx, ny = g.cells
    num, den = kernels.p2g(
        ps.x, ps.m, ps.v, ps.C, g.origin[0], g.origin[1], g.dx, nx, ny
    )
    use = den > params.tau_m
    coeffs = bsl_field.coeffs.copy()
    coeffs[use] = num[use] / den[use, None]
    return VelocityField(g, coeffs), use


def g2p(ps: ParticleSet, u_next: VelocityField) -> ParticleSet:
    """Particle velocities and affine coefficients from the grid field.

    Out-of-region particles evaluate at the clamped position.
    """
    out = ps.copy()
    if len(ps) == 0:
        return out
    vals, grads = u_next.eval_grad(ps.x, clamp=True)
    out.v = vals
    out.C = grads
    return out


def seed_particles(grid: GridDesc, region_mask: np.ndarray, per_cell: int,
                   rho: float, rng: np.random.Generator,
                   accept=None) -> ParticleSet:
    """Stratified jittered seeding in the cells selected by region_mask.

    per_cell samples per cell on a ceil(sqrt)-subdivided lattice; `accept`
    (points -> bool mask) can reject samples, e.g. against a level set.
    Masses are rho dx^2 / per_cell so grid density is consistent.
    """
    if per_cell <= 0 or not region_mask.any():
        return ParticleSet.empty()
    cells = np.argwhere(region_mask)
    k = int(np.ceil(np.sqrt(per_cell)))
    sub = np.array([(a, b) for a in range(k) for b in range(k)][:per_cell])
    lo = np.array(grid.origin)
    pos = []
    for ci, cj in cells:
        jitter = rng.uniform(0.0, 1.0, size=(len(sub), 2))
        pts = lo + (np.array([ci, cj]) + (sub + jitter) / k) * grid.dx
        pos.append(pts)
    pos = np.concatenate(pos)
    if accept is not None:
        pos = pos[accept(pos)]
    n = len(pos)
    mass = rho * grid.dx * grid.dx / per_cell
    return ParticleSet(
        pos, np.full(n, mass), np.zeros((n, 2)), np.zeros((n, 2, 2))
    )


def concat(a: ParticleSet, b: ParticleSet) -> ParticleSet:
    return ParticleSet(
        np.concatenate([a.x, b.x]),
        np.concatenate([a.m, b.m]),
        np.concatenate([a.v, b.v]),
        np.concatenate([a.C, b.C]),
    )
