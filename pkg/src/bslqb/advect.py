"""Velocity self-advection: explicit semi-Lagrangian and BSLQB.

A step has two halves. Per-node solves produce intermediate velocities
w(x_i) at every cell center: explicit SL evaluates with the stale field,
BSLQB solves the implicit relation w = u^n(x_i - dt w) by Newton with the
explicit value as initial guess. Coefficient recovery then solves the
blended interpolation system

    sum_j (lambda N_j(x_i) + (1-lambda) delta_ij) wbar_j = w(x_i)

for interior coefficients, with the outermost ring pinned to boundary
values (the node-solve values by default, or a supplied boundary field).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import GridDesc, VelocityField
from .linsolve import pcg

# per-axis quadratic kernel values at a cell center (offsets -1, 0, 1)
_W_AXIS = np.array([0.125, 0.75, 0.125])
_W0 = np.outer(_W_AXIS, _W_AXIS)


class RecoveryError(RuntimeError):
    """Coefficient-recovery CG failed to converge (signals a bug)."""


@dataclass(frozen=True)
class AdvectionParams:
    lam: float = 1.0
    newton_tol: float | None = None  # None: 1e-10 * dx / dt
    max_newton_iters: int = 10
    cg_tol: float = 1e-12
    max_cg_iters: int = 500
    scheme: str = "bslqb"  # or "sl"

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0,1]")
        if self.newton_tol is not None and self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if self.cg_tol <= 0:
            raise ValueError("cg_tol must be positive")
        if self.scheme not in ("bslqb", "sl"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def resolve_newton_tol(self, dx: float, dt: float) -> float:
        if self.newton_tol is not None:
            return self.newton_tol
        return 1e-10 * dx / max(dt, 1e-300)


@dataclass(frozen=True)
class NodeSolveReport:
    iterations: int
    converged: bool
    used_fallback: bool


@dataclass
class AdvectStats:
    mean_newton_iters: float = 0.0
    fallback_fraction: float = 0.0
    cg_iterations: int = 0
    cg_residual: float = 0.0


def _eval_with_boundary(field: VelocityField, pts, boundary, t):
    """Grid interpolation where possible, boundary field elsewhere."""
    g = field.grid
    lo, hi = g.interp_bounds()
    inside = np.all((pts > lo) & (pts <= hi), axis=1)
    out = np.empty((len(pts), 2))
    if inside.any():
        out[inside] = field.eval(pts[inside])
    rest = ~inside
    if rest.any():
        if boundary is not None:
            out[rest] = boundary(pts[rest], t)
        else:
            out[rest] = field.eval(g.clamp_to_interpolatable(pts[rest]), clamp=True)
    return out


def explicit_sl_node(u_n: VelocityField, x_i, dt, boundary=None, t=0.0) -> np.ndarray:
    """u(x_i - dt u(x_i), t^n) with clamped/boundary evaluation off-region."""
    x = np.asarray(x_i, dtype=float).reshape(1, 2)
    u0 = _eval_with_boundary(u_n, x, boundary, t)
    y = x - dt * u0
    return _eval_with_boundary(u_n, y, boundary, t)[0]


def bslqb_node_solve(u_n: VelocityField, x_i, dt, params: AdvectionParams,
                     boundary=None, t=0.0):
    """Newton solve of w = u^n(x_i - dt w) at one node.

    Falls back to explicit semi-Lagrangian when the characteristic exits
    the interpolatable region, the Jacobian turns singular, or the
    iteration does not converge.
    """
    g = u_n.grid
    tol = params.resolve_newton_tol(g.dx, dt)
    x = np.asarray(x_i, dtype=float)
    w_sl = explicit_sl_node(u_n, x, dt, boundary, t)
    lo, hi = g.interp_bounds()

    w = w_sl.copy()
    for k in range(1, params.max_newton_iters + 1):
        y = x - dt * w
        if not np.all((y > lo) & (y <= hi)):
            return w_sl, NodeSolveReport(k, False, True)
        vals, grads = u_n.eval_grad(y.reshape(1, 2))
        r = vals[0] - w
        if np.hypot(r[0], r[1]) <= tol:
            return w, NodeSolveReport(k, True, False)
        J = np.eye(2) + dt * grads[0]
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if abs(det) < 1e-12:
            return w_sl, NodeSolveReport(k, False, True)
        w = w + np.array(
            [
                (J[1, 1] * r[0] - J[0, 1] * r[1]) / det,
                (-J[1, 0] * r[0] + J[0, 0] * r[1]) / det,
            ]
        )
    return w_sl, NodeSolveReport(params.max_newton_iters, False, True)


def _ring_mask(nx, ny):
    m = np.zeros((nx, ny), dtype=bool)
    m[0, :] = m[-1, :] = True
    m[:, 0] = m[:, -1] = True
    return m


def _conv3(a):
    """3x3 tensor-B-spline weighting of a full coefficient array; returns
    values at interior cells (shape (nx-2, ny-2))."""
    nx, ny = a.shape
    out = np.zeros((nx - 2, ny - 2))
    for p in range(3):
        for q in range(3):
            out += _W0[p, q] * a[p : p + nx - 2, q : q + ny - 2]
    return out


def recover_coefficients(nodal: np.ndarray, grid: GridDesc,
                         params: AdvectionParams,
                         bc: np.ndarray) -> VelocityField:
    """Solve the lambda-blended system for interior coefficients.

    nodal holds w(x_i) at every cell center, bc the fixed coefficient
    values on the outermost ring (same array shape; only ring entries are
    read). The system is SPD and very well conditioned; CG failure raises.
    """
    nx, ny = grid.cells
    lam = params.lam
    coeffs = np.array(bc, dtype=float, copy=True)
    if lam == 0.0:
        coeffs[1:-1, 1:-1] = nodal[1:-1, 1:-1]
        return VelocityField(grid, coeffs)

    ring = _ring_mask(nx, ny)
    diag_val = lam * _W0[1, 1] + (1.0 - lam)
    shape_int = (nx - 2, ny - 2)
    n_int = shape_int[0] * shape_int[1]

    def apply_op(v):
        full = np.zeros((nx, ny))
        full[1:-1, 1:-1] = v.reshape(shape_int)
        out = lam * _conv3(full) + (1.0 - lam) * v.reshape(shape_int)
        return out.ravel()

    total_iters = 0
    worst_res = 0.0
    for comp in range(2):
        ring_only = np.where(ring, coeffs[:, :, comp], 0.0)
        rhs = nodal[1:-1, 1:-1, comp] - lam * _conv3(ring_only)
        res = pcg(
            apply_op,
            rhs.ravel(),
            diag=np.full(n_int, diag_val),
            tol=params.cg_tol,
            max_iters=params.max_cg_iters,
        )
        if not res.converged:
            raise RecoveryError(
                f"coefficient recovery CG stalled at residual {res.residual:.3e} "
                f"after {res.iterations} iterations"
            )
        total_iters += res.iterations
        worst_res = max(worst_res, res.residual)
        coeffs[1:-1, 1:-1, comp] = res.x.reshape(shape_int)
    field = VelocityField(grid, coeffs)
    field._recovery_info = (total_iters, worst_res)
    return field


def assemble_recovery_matrix(grid: GridDesc, lam: float):
    """Explicit system matrix for tests: (A_int, A_ring) where rows are
    interior cells and columns split into interior / ring cells."""
    import scipy.sparse as sp

    nx, ny = grid.cells
    idx_full = -np.ones((nx, ny), dtype=np.int64)
    interior = np.zeros((nx, ny), dtype=bool)
    interior[1:-1, 1:-1] = True
    idx_int = -np.ones((nx, ny), dtype=np.int64)
    idx_int[interior] = np.arange(interior.sum())
    ring = ~interior
    idx_ring = -np.ones((nx, ny), dtype=np.int64)
    idx_ring[ring] = np.arange(ring.sum())

    rows_i, cols_i, vals_i = [], [], []
    rows_r, cols_r, vals_r = [], [], []
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            r = idx_int[i, j]
            for p in (-1, 0, 1):
                for q in (-1, 0, 1):
                    w = lam * _W0[p + 1, q + 1]
                    if p == 0 and q == 0:
                        w += 1.0 - lam
                    ii, jj = i + p, j + q
                    if interior[ii, jj]:
                        rows_i.append(r)
                        cols_i.append(idx_int[ii, jj])
                        vals_i.append(w)
                    else:
                        rows_r.append(r)
                        cols_r.append(idx_ring[ii, jj])
                        vals_r.append(w)
    n_int = int(interior.sum())
    n_ring = int(ring.sum())
    A_int = sp.coo_matrix((vals_i, (rows_i, cols_i)), shape=(n_int, n_int)).tocsr()
    A_ring = sp.coo_matrix((vals_r, (rows_r, cols_r)), shape=(n_int, n_ring)).tocsr()
    return A_int, A_ring


def advect_field(u_n: VelocityField, dt, params: AdvectionParams,
                 boundary=None, t=0.0, stat_mask=None):
    """Full advection update: node solves everywhere, then recovery.

    boundary, when given, is a callable (points (N,2), time) -> (N,2) used
    for characteristic points that leave the grid and for the ring
    coefficient values at t + dt; without it evaluation clamps and the
    ring takes the node-solve values.

    stat_mask restricts the Newton statistics to flow-relevant nodes (the
    callers' active fluid dofs); solves behind inlets or inside solids are
    boundary-condition storage, not method behavior.

    Returns (VelocityField, AdvectStats).
    """
    g = u_n.grid
    nx, ny = g.cells
    tol = params.resolve_newton_tol(g.dx, dt)
    ox, oy = g.origin

    if params.scheme == "sl":
        w, offgrid, _ = kernels.explicit_nodes(u_n.coeffs, ox, oy, g.dx, dt)
        iters = np.zeros((nx, ny), dtype=np.int32)
        fallback = np.zeros((nx, ny), dtype=bool)
    else:
        w, iters, _, fallback, offgrid = kernels.bslqb_nodes(
            u_n.coeffs, ox, oy, g.dx, dt, tol, params.max_newton_iters
        )

    if boundary is not None and offgrid.any():
        pts = g.cell_center_points().reshape(nx, ny, 2)[offgrid]
        u0 = _eval_with_boundary(u_n, pts, boundary, t)
        y = pts - dt * u0
        w[offgrid] = _eval_with_boundary(u_n, y, boundary, t)

    interior = ~_ring_mask(nx, ny)
    if stat_mask is not None:
        interior = interior & stat_mask
    n_int = interior.sum()
    stats = AdvectStats()
    if params.scheme == "bslqb" and n_int:
        stats.mean_newton_iters = float(iters[interior].mean())
        stats.fallback_fraction = float(fallback[interior].sum() / n_int)

    if boundary is not None:
        ring = _ring_mask(nx, ny)
        bc = np.zeros((nx, ny, 2))
        bc[ring] = boundary(g.cell_center_points().reshape(nx, ny, 2)[ring], t + dt)
    else:
        bc = w

    out = recover_coefficients(w, g, params, bc)
    info = getattr(out, "_recovery_info", (0, 0.0))
    stats.cg_iterations, stats.cg_residual = info[0], info[1]
    return out, stats


def advect_levelset(phi_values: np.ndarray, w_nodes: np.ndarray, dt,
                    grid: GridDesc) -> np.ndarray:
    """Semi-Lagrangian nodal scalar update with multilinear lookback.

    phi^{n+1}(x_c) = phi^n(x_c - dt w(x_c)); the upwind point clamps to the
    grid box.
    """
    pts = grid.node_points()
    y = pts - dt * w_nodes.reshape(-1, 2)
    vals = kernels.sample_linear(
        np.ascontiguousarray(phi_values), grid.origin[0], grid.origin[1], grid.dx, y
    )
    return vals.reshape(phi_values.shape)
