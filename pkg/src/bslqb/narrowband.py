"""Narrow-band free surface: particle band + level set.

The surface is carried twice: particles near the interface (accurate,
splashy) and a nodal level set everywhere (cheap in the deep bulk). Each
step the particle union-of-balls field is folded into the advected level
set by pointwise minimum and the result is redistanced by fast sweeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import LevelSet
from .grid import GridDesc, VelocityField
from .particles import ParticleSet, concat, g2p, seed_particles

DEFAULT_PARTICLE_RADIUS_FACTOR = 0.36  # r_p in units of dx


class NoInterfaceError(ValueError):
    pass


@dataclass
class NarrowBandState:
    phi: LevelSet
    particles: ParticleSet
    band_width: float


def particles_to_levelset(ps: ParticleSet, grid: GridDesc, r_p: float,
                          far: float | None = None) -> LevelSet:
    """Union-of-balls distance estimate phi(x) = min_p |x - x_p| - r_p,
    evaluated on nodes within a 3-cell reach of particles; far elsewhere."""
    mx, my = grid.node_counts
    if far is None:
        far = 10.0 * max(r_p, grid.dx)
    vals = kernels.particles_to_levelset(
        ps.x, r_p, grid.origin[0], grid.origin[1], grid.dx, mx, my, far
    )
    return LevelSet(grid, vals)


def union_levelsets(a: LevelSet, b: LevelSet) -> LevelSet:
    if a.grid != b.grid:
        raise ValueError("level set union needs matching grids")
    return LevelSet(a.grid, np.minimum(a.values, b.values))


def _interface_distances(values: np.ndarray, dx: float):
    """Frozen mask and edge-linear distances at nodes next to sign changes."""
    neg = values < 0.0
    d = np.full(values.shape, np.inf)
    for axis in (0, 1):
        a = values if axis == 0 else values.T
        na = neg if axis == 0 else neg.T
        dd = d if axis == 0 else d.T
        flip = na[:-1, :] != na[1:, :]
        if flip.any():
            va = a[:-1, :][flip]
            vb = a[1:, :][flip]
            t = np.abs(va) / np.maximum(np.abs(va) + np.abs(vb), 1e-300)
            lo = dd[:-1, :]
            hi = dd[1:, :]
            lo[flip] = np.minimum(lo[flip], t * dx)
            hi[flip] = np.minimum(hi[flip], (1.0 - t) * dx)
    frozen = np.isfinite(d)
    frozen |= values == 0.0
    d[values == 0.0] = 0.0
    return frozen, d


def redistance(phi: LevelSet, iterations: int = 4,
               untouched: np.ndarray | None = None) -> LevelSet:
    """Fast-sweeping redistance: frozen interface nodes keep edge-linear
    distances, the rest solve |grad phi| = 1 by monotone Godunov sweeps
    (4 directions per iteration). Signs are preserved everywhere.

    untouched marks nodes (e.g. inside solids) whose values pass through.
    """
    g = phi.grid
    vals = phi.values
    frozen, d = _interface_distances(vals, g.dx)
    if not frozen.any():
        raise NoInterfaceError("level set has no sign change to redistance")
    mx, my = vals.shape
    far = (mx + my) * g.dx
    dist = np.where(frozen, d, far)
    block = frozen if untouched is None else (frozen | untouched)
    dist = np.ascontiguousarray(dist)
    kernels.redistance_sweeps(dist, np.ascontiguousarray(block), g.dx, iterations)
    out = np.where(vals < 0.0, -dist, dist)
    if untouched is not None:
        out[untouched] = vals[untouched]
    return LevelSet(g, out)


def phi_at_cell_centers(phi: LevelSet) -> np.ndarray:
    v = phi.values
    return 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])


def phi_at_points(phi: LevelSet, pts: np.ndarray) -> np.ndarray:
    g = phi.grid
    return kernels.sample_linear(phi.values, g.origin[0], g.origin[1], g.dx, pts)


def reseed_band(state: NarrowBandState, per_cell: int, rho: float,
                rng: np.random.Generator,
                u_field: VelocityField | None = None) -> NarrowBandState:
    """Repopulate the band: keep particles with phi in [-W, 0], top cells
    whose center lies in the band up to per_cell samples, velocities of new
    particles from the grid field."""
    W = state.band_width
    g = state.phi.grid
    ps = state.particles
    if W <= 0.0 or per_cell <= 0:
        return NarrowBandState(state.phi, ParticleSet.empty(), W)

    if len(ps):
        phi_p = phi_at_points(state.phi, ps.x)
        ps = ps.select((phi_p >= -W) & (phi_p <= 0.0))

    centers = phi_at_cell_centers(state.phi)
    band_cells = (centers >= -W) & (centers <= 0.0)

    counts = np.zeros(g.cells, dtype=np.int64)
    if len(ps):
        idx = ps.cell_indices(g)
        ok = (
            (idx[:, 0] >= 0) & (idx[:, 0] < g.cells[0])
            & (idx[:, 1] >= 0) & (idx[:, 1] < g.cells[1])
        )
        np.add.at(counts, (idx[ok, 0], idx[ok, 1]), 1)

    need = band_cells & (counts < per_cell)
    new = ParticleSet.empty()
    if need.any():
        # seed a full stratified set, then thin to the per-cell deficit
        cand = seed_particles(
            g, need, per_cell, rho, rng,
            accept=lambda p: phi_at_points(state.phi, p) <= 0.0,
        )
        if len(cand):
            idx = cand.cell_indices(g)
            deficit = per_cell - counts
            order = rng.permutation(len(cand))
            take = np.zeros(len(cand), dtype=bool)
            used = np.zeros(g.cells, dtype=np.int64)
            for k in order:
                ci, cj = idx[k]
                if used[ci, cj] < deficit[ci, cj]:
                    used[ci, cj] += 1
                    take[k] = True
            new = cand.select(take)
            if u_field is not None and len(new):
                new = g2p(new, u_field)
    out = concat(ps, new) if len(new) else ps
    return NarrowBandState(state.phi, out, W)
