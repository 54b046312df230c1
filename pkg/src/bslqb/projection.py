"""Variational pressure projection on the cut-cell domain.

Assembles the lumped mass, divergence and boundary operators by exact
quadrature over the fluid geometry, reduces the saddle system to the SPD
Schur complement G^T (M^l)^-1 G for interior pressures and boundary
multipliers, solves it with Jacobi-PCG and applies the velocity
correction

    U = W + (M^l)^-1 (g_hat - G [P; Lambda]).

Within one grid cell every basis function is a fixed polynomial (the
spline knots sit on cell faces), so degree-5 polygon rules and 4-point
segment Gauss make all entries exact; that exactness is what lets a
standing pool rest without numerical currents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .geometry import EMPTY, FULL, CutCellDomain, polygon_quadrature, segment_quadrature
from .grid import GridDesc, VelocityField
from .linsolve import IndefiniteOperatorError, pcg

AREA_DEGREE = 5  # covers chi * dN (total degree 5) and N (degree 4)
SEG_DEGREE = 7  # chi * N restricted to a segment is degree 6

# Coefficients whose basis function barely overlaps the fluid are excluded
# (they keep their advected value; inside solids the driver pins them to
# the boundary velocity). The lumped-mass division 1/m makes corrected
# velocities on sliver dofs unboundedly sensitive to force mismatches:
# 1e-12 and 1e-3 cutoffs both produced growing surface spikes at CFL 4
# (10-60x within 100 steps); at 5% of a cell the skin dofs whose centers
# sit inside the solid are excluded and the feedback disappears.
U_ACTIVE_FRACTION = 0.05


class ProjectionError(RuntimeError):
    pass


@dataclass
class ProjectionSystem:
    grid: GridDesc
    mass: np.ndarray  # (2 nU,) rho * int N_i (dt-independent)
    D: sp.csr_matrix  # (nP, 2 nU)
    B: sp.csr_matrix  # (nL, 2 nU)
    G: sp.csr_matrix  # (2 nU, nP + nL) = [-D^T, B^T]
    S_unit: sp.csr_matrix  # G^T diag(1/mass) G; Schur = dt * S_unit
    g_hat: np.ndarray  # (2 nU,) rho g int N_i (dt-independent)
    A: np.ndarray  # (nL,)
    u_ids: np.ndarray  # (nx, ny) coefficient -> dof or -1
    p_ids: np.ndarray  # (nx+1, ny+1) node -> pressure dof or -1
    lam_points: np.ndarray  # (nL, 2) boundary polyline vertex positions
    has_null_mode: bool
    dt: float
    # background dofs: below the activity cutoff but overlapping the fluid;
    # they are not corrected, yet their (boundary-condition) velocities
    # carry flux that the constraints must see as data
    bg_ids: np.ndarray = None  # (nx, ny) -> background dof or -1
    D_bg: sp.csr_matrix = None  # (nP, 2 nBg)
    B_bg: sp.csr_matrix = None  # (nL, 2 nBg)

    def with_dt(self, dt: float) -> "ProjectionSystem":
        """Cheap retarget to a new time step (only M scales with dt)."""
        from dataclasses import replace

        return replace(self, dt=dt)

    @property
    def m_diag(self):
        return self.mass / self.dt

    @property
    def S(self):
        return self.S_unit * self.dt

    @property
    def n_u(self):
        return self.mass.size // 2

    @property
    def n_p(self):
        return self.D.shape[0]

    @property
    def n_lam(self):
        return self.B.shape[0]


@dataclass
class ProjectionSolution:
    U: VelocityField
    P: np.ndarray
    Lambda: np.ndarray
    pressure_nodal: np.ndarray  # zeros at inactive nodes
    iterations: int
    residual: float
    div_residual: float  # ||D U||_inf
    div_w: float  # ||D W||_inf
    x_full: np.ndarray = None  # warm-start vector for the next solve


# ---------------------------------------------------------------------------
# reference integrals on the unit cell (exact, via Gauss on single branches)

def _axis_quad_vals(u):
    """Quadratic kernel values/derivatives at unit-cell coords for the
    three centers at offsets -1, 0, 1 (branch-free closed forms)."""
    e = np.asarray(u) - 0.5
    w = np.stack([0.5 * (e - 0.5) ** 2, 0.75 - e * e, 0.5 * (e + 0.5) ** 2], axis=-1)
    d = np.stack([e - 0.5, -2.0 * e, e + 0.5], axis=-1)
    return w, d


def _axis_lin_vals(u):
    u = np.asarray(u)
    return np.stack([1.0 - u, u], axis=-1)


def _reference_integrals():
    x, w = leggauss(6)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    qv, qd = _axis_quad_vals(x)  # (6,3)
    lv = _axis_lin_vals(x)  # (6,2)
    m1 = w @ qv  # (3,) per-axis int of N
    i_chi_n = np.einsum("q,qa,qd->ad", w, lv, qv)  # (2,3)
    i_chi_dn = np.einsum("q,qa,qd->ad", w, lv, qd)  # (2,3)
    ref_m = np.outer(m1, m1)  # (3,3)
    # ref_d[a,b,di,dj,beta]: int chi_(a,b) dN_(di,dj)/dx_beta over unit cell
    ref_d = np.empty((2, 2, 3, 3, 2))
    ref_d[..., 0] = np.einsum("ad,be->abde", i_chi_dn, i_chi_n)
    ref_d[..., 1] = np.einsum("ad,be->abde", i_chi_n, i_chi_dn)
    return ref_m, ref_d


_REF_M, _REF_D = _reference_integrals()
_OFFS = np.arange(-1, 2)


def _kernel_products_at(points, cell, grid):
    """N values/gradients (9 centers) and chi values (4 nodes) at points
    inside one cell. Returns (nvals (k,3,3), ngrad (k,3,3,2), chi (k,2,2))."""
    lo = np.array(grid.origin) + np.array(cell, dtype=float) * grid.dx
    u = (points - lo) / grid.dx
    qvx, qdx = _axis_quad_vals(u[:, 0])
    qvy, qdy = _axis_quad_vals(u[:, 1])
    lvx = _axis_lin_vals(u[:, 0])
    lvy = _axis_lin_vals(u[:, 1])
    nvals = qvx[:, :, None] * qvy[:, None, :]
    ngrad = np.empty(nvals.shape + (2,))
    ngrad[..., 0] = qdx[:, :, None] * qvy[:, None, :] / grid.dx
    ngrad[..., 1] = qvx[:, :, None] * qdy[:, None, :] / grid.dx
    chi = lvx[:, :, None] * lvy[:, None, :]
    return nvals, ngrad, chi


# ---------------------------------------------------------------------------

KNOT_STRIDE = 3  # crossings kept as multiplier knots along straight runs


def _segment_knot_intervals(vert_pos, raw_segs):
    """Knot interval (kA, kB) per segment.

    Anchors (direction changes, chain ends) always carry knots; along
    straight runs a knot is kept every KNOT_STRIDE crossings, and every
    segment maps to the pair of kept knots bracketing it.
    """
    nv = len(vert_pos)
    ns = len(raw_segs)
    adj = [[] for _ in range(nv)]
    for si, (v0, v1, _) in enumerate(raw_segs):
        adj[v0].append((si, v1))
        adj[v1].append((si, v0))

    def straight(v):
        if len(adj[v]) != 2:
            return False
        (_, a), (_, b) = adj[v]
        da = vert_pos[a] - vert_pos[v]
        db = vert_pos[v] - vert_pos[b]
        cross = da[0] * db[1] - da[1] * db[0]
        na = np.hypot(*da)
        nb = np.hypot(*db)
        return abs(cross) <= 1e-9 * na * nb

    intervals = [(raw_segs[si][0], raw_segs[si][1]) for si in range(ns)]
    seen = np.zeros(ns, dtype=bool)
    anchors = sorted(v for v in range(nv) if not straight(v))
    for a0 in anchors:
        for si0, nxt in sorted(adj[a0]):
            if seen[si0]:
                continue
            path = [a0]
            seg_path = [si0]
            v = nxt
            prev_seg = si0
            while straight(v):
                path.append(v)
                nxt_candidates = [(si, o) for si, o in adj[v] if si != prev_seg]
                if not nxt_candidates:
                    break
                prev_seg, v = nxt_candidates[0][0], nxt_candidates[0][1]
                seg_path.append(prev_seg)
            path.append(v)
            for si in seg_path:
                seen[si] = True
            last = len(path) - 1
            kept = [0]
            k = KNOT_STRIDE
            while k < last and last - k >= (KNOT_STRIDE + 1) // 2:
                kept.append(k)
                k += KNOT_STRIDE
            kept.append(last)
            kept = sorted(set(kept))
            for a, b in zip(kept[:-1], kept[1:]):
                for i in range(a, b):
                    intervals[seg_path[i]] = (path[a], path[b])
    return intervals


def assemble(domain: CutCellDomain, grid: GridDesc, rho: float, gravity,
             bc_speed, dt: float) -> ProjectionSystem:
    """Build the projection system for the current fluid domain.

    bc_speed: callable (points (k,2), unit normal (2,)) -> normal speeds, or
    a scalar used uniformly on the Dirichlet boundary.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    nx, ny = grid.cells
    dx = grid.dx
    cls = domain.classification
    if not (cls != EMPTY).any():
        raise ProjectionError("empty fluid domain")
    gravity = np.asarray(gravity, dtype=float)

    # raw int_Omega N_i, accumulated cellwise
    m_int = np.zeros((nx + 2, ny + 2))  # padded by 1 for stencil scatter
    full_mask = cls == FULL
    for a in range(3):
        for b in range(3):
            m_int[a : a + nx, b : b + ny] += full_mask * (_REF_M[a, b] * dx * dx)

    # divergence triplets; rows keyed by node, cols by coefficient cell
    fi, fj = np.nonzero(full_mask)
    nfull = fi.size
    rows_n = []  # (node_i, node_j)
    cols_c = []  # (cell_i, cell_j)
    vals_b = []  # (k, 2) values per beta
    if nfull:
        A_, B_, DI, DJ = np.meshgrid(
            np.arange(2), np.arange(2), _OFFS, _OFFS, indexing="ij"
        )
        a_ = A_.ravel()
        b_ = B_.ravel()
        di = DI.ravel()
        dj = DJ.ravel()
        node_i = (fi[:, None] + a_).ravel()
        node_j = (fj[:, None] + b_).ravel()
        cell_i = (fi[:, None] + di).ravel()
        cell_j = (fj[:, None] + dj).ravel()
        v = np.broadcast_to(
            (_REF_D[a_, b_, di + 1, dj + 1, :] * dx), (nfull, a_.size, 2)
        ).reshape(-1, 2)
        rows_n.append(np.stack([node_i, node_j], axis=1))
        cols_c.append(np.stack([cell_i, cell_j], axis=1))
        vals_b.append(v)

    for (ci, cj), polys in domain.polygons.items():
        pts_list = []
        wts_list = []
        for poly in polys:
            rule = polygon_quadrature(poly, AREA_DEGREE, min_area=1e-14 * dx * dx)
            if rule.weights.size:
                pts_list.append(rule.points)
                wts_list.append(rule.weights)
        if not pts_list:
            continue
        pts = np.concatenate(pts_list)
        wts = np.concatenate(wts_list)
        nvals, ngrad, chi = _kernel_products_at(pts, (ci, cj), grid)
        m_int[ci : ci + 3, cj : cj + 3] += np.einsum("q,qde->de", wts, nvals)
        dvals = np.einsum("qab,qdeg->abdeg", chi * wts[:, None, None], ngrad)
        A_, B_, DI, DJ = np.meshgrid(
            np.arange(2), np.arange(2), _OFFS, _OFFS, indexing="ij"
        )
        rows_n.append(
            np.stack([(ci + A_).ravel(), (cj + B_).ravel()], axis=1)
        )
        cols_c.append(
            np.stack([(ci + DI).ravel(), (cj + DJ).ravel()], axis=1)
        )
        vals_b.append(dvals.reshape(-1, 2))

    m_core = m_int[1 : nx + 1, 1 : ny + 1]
    # padded border rows/cols belong to off-grid coefficients of boundary
    # cells; fluid cells never touch the grid border in valid scenes, but
    # guard anyway by folding nothing (they are simply dropped)
    active_u = m_core > U_ACTIVE_FRACTION * dx * dx
    u_ids = -np.ones((nx, ny), dtype=np.int64)
    u_ids[active_u] = np.arange(active_u.sum())
    n_u = int(active_u.sum())
    if n_u == 0:
        raise ProjectionError("no active velocity coefficients")
    bg_u = (m_core > 1e-14 * dx * dx) & ~active_u
    bg_ids = -np.ones((nx, ny), dtype=np.int64)
    bg_ids[bg_u] = np.arange(bg_u.sum())
    n_bg = int(bg_u.sum())

    rows_n = np.concatenate(rows_n)
    cols_c = np.concatenate(cols_c)
    vals_b = np.concatenate(vals_b)

    # Boundary integrals. Multipliers are 1D hat functions in arclength on
    # knots of the boundary polyline: the nodal bilinear trace space
    # degenerates on grid-aligned walls (proportional traces across the
    # wall line make the Schur complement singular), whereas the polyline
    # basis is locally independent and still represents any piecewise-
    # linear boundary pressure exactly. Along straight runs only every
    # third crossing becomes a knot: one-cell hats on walls turn dependent
    # once sliver velocity dofs are excluded, and linear pressure profiles
    # are interpolated exactly at any knot spacing.
    vert_key = {}
    vert_pos = []

    def vid(p):
        key = (float(p[0]), float(p[1]))  # crossings are shared bitwise
        if key not in vert_key:
            vert_key[key] = len(vert_pos)
            vert_pos.append(np.asarray(p, dtype=float))
        return vert_key[key]

    raw_segs = []  # (v0, v1, segment)
    for seg in domain.segments:
        if seg.length <= 1e-14 * dx:
            continue
        raw_segs.append((vid(seg.p0), vid(seg.p1), seg))
    intervals = _segment_knot_intervals(vert_pos, raw_segs)

    seg_entries = []  # (knot0, knot1, cell, bvals (2,3,3,2), avals, lens)
    for (v0, v1, seg), (kA, kB) in zip(raw_segs, intervals):
        rule = segment_quadrature(seg.p0, seg.p1, SEG_DEGREE, min_length=1e-14 * dx)
        if not rule.weights.size:
            continue
        nvals, _, _ = _kernel_products_at(rule.points, seg.cell, grid)
        if callable(bc_speed):
            a_q = np.asarray(bc_speed(rule.points, seg.normal), dtype=float)
        else:
            a_q = np.full(rule.weights.size, float(bc_speed))
        posA = vert_pos[kA]
        posB = vert_pos[kB]
        L = float(np.hypot(*(posB - posA)))
        if kA == kB or L <= 1e-14 * dx:
            continue
        s = np.hypot(*(rule.points - posA).T) / L
        hats = np.stack([1.0 - s, s], axis=1)  # (q, 2)
        hw = hats * rule.weights[:, None]
        bvals = np.einsum("qv,qde,g->vdeg", hw, nvals, seg.normal)
        avals = hw.T @ a_q  # (2,)
        lens = hw.sum(axis=0)
        seg_entries.append((kA, kB, seg.cell, bvals, avals, lens))

    # pressure dofs: nodes with fluid area in their cell support
    adj = np.zeros((nx + 1, ny + 1))
    adj[:-1, :-1] += domain.areas
    adj[1:, :-1] += domain.areas
    adj[:-1, 1:] += domain.areas
    adj[1:, 1:] += domain.areas
    active_p = adj > 1e-12 * dx * dx
    p_ids = -np.ones((nx + 1, ny + 1), dtype=np.int64)
    p_ids[active_p] = np.arange(active_p.sum())
    n_p = int(active_p.sum())

    # knot hats with vanishing support are dropped
    hat_len = np.zeros(len(vert_pos))
    for v0, v1, _, _, _, lens in seg_entries:
        hat_len[v0] += lens[0]
        hat_len[v1] += lens[1]
    keep_v = hat_len > 1e-10 * dx
    lam_of_vert = -np.ones(len(vert_pos), dtype=np.int64)
    lam_of_vert[keep_v] = np.arange(keep_v.sum())
    n_lam = int(keep_v.sum())
    lam_points = (
        np.array(vert_pos)[keep_v] if n_lam else np.zeros((0, 2))
    )

    # D matrix from triplets (background columns are folded into the
    # right-hand side at solve time)
    node_ok = p_ids[rows_n[:, 0], rows_n[:, 1]]
    cell_in = (
        (cols_c[:, 0] >= 0)
        & (cols_c[:, 0] < nx)
        & (cols_c[:, 1] >= 0)
        & (cols_c[:, 1] < ny)
    )
    cell_ok = np.where(cell_in, u_ids[cols_c[:, 0] % nx, cols_c[:, 1] % ny], -1)
    bg_ok = np.where(cell_in, bg_ids[cols_c[:, 0] % nx, cols_c[:, 1] % ny], -1)
    keep = (node_ok >= 0) & (cell_ok >= 0)
    r = np.repeat(node_ok[keep], 2)
    c = (2 * cell_ok[keep, None] + np.arange(2)).ravel()
    v = vals_b[keep].ravel()
    D = sp.coo_matrix((v, (r, c)), shape=(n_p, 2 * n_u)).tocsr()
    keep_bg = (node_ok >= 0) & (bg_ok >= 0)
    r = np.repeat(node_ok[keep_bg], 2)
    c = (2 * bg_ok[keep_bg, None] + np.arange(2)).ravel()
    v = vals_b[keep_bg].ravel()
    D_bg = sp.coo_matrix((v, (r, c)), shape=(n_p, 2 * n_bg)).tocsr()

    rows_l, cols_l, vals_l = [], [], []
    rows_g, cols_g, vals_g = [], [], []
    A_vec = np.zeros(n_lam)
    for v0, v1, (ci, cj), bvals, avals, _ in seg_entries:
        for v, lid in ((0, lam_of_vert[v0]), (1, lam_of_vert[v1])):
            if lid < 0:
                continue
            A_vec[lid] += avals[v]
            for di in range(3):
                for dj in range(3):
                    gi, gj = ci + di - 1, cj + dj - 1
                    if not (0 <= gi < nx and 0 <= gj < ny):
                        continue
                    uid = u_ids[gi, gj]
                    bid = bg_ids[gi, gj]
                    if uid < 0 and bid < 0:
                        continue
                    for beta in range(2):
                        val = bvals[v, di, dj, beta]
                        if val != 0.0:
                            if uid >= 0:
                                rows_l.append(lid)
                                cols_l.append(2 * uid + beta)
                                vals_l.append(float(val))
                            else:
                                rows_g.append(lid)
                                cols_g.append(2 * bid + beta)
                                vals_g.append(float(val))
    B = sp.coo_matrix(
        (vals_l, (rows_l, cols_l)), shape=(n_lam, 2 * n_u)
    ).tocsr()
    B_bg = sp.coo_matrix(
        (vals_g, (rows_g, cols_g)), shape=(n_lam, 2 * n_bg)
    ).tocsr()

    mass = np.repeat(rho * m_core[active_u], 2)
    g_hat = mass * np.tile(gravity, n_u)

    G = sp.hstack([-D.T, B.T]).tocsr()
    S_unit = (G.T @ G.multiply((1.0 / mass)[:, None])).tocsr()
    S_unit = (S_unit + S_unit.T) * 0.5

    z = G @ np.ones(n_p + n_lam)
    gmax = np.abs(G.data).max() if G.nnz else 1.0
    has_null = bool(np.max(np.abs(z)) < 1e-7 * gmax) if z.size else False

    return ProjectionSystem(
        grid, mass, D, B, G, S_unit, g_hat, A_vec, u_ids, p_ids,
        lam_points, has_null, dt, bg_ids, D_bg, B_bg
    )


def solve(system: ProjectionSystem, W: VelocityField, tol: float = 1e-10,
          max_iters: int | None = None, x0=None) -> ProjectionSolution:
    """Schur solve and velocity correction.

    x0 warm-starts CG (e.g. the previous step's pressures). Raises
    ProjectionError when CG exhausts max_iters, and surfaces negative
    curvature as an assembly bug.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sys_ = system
    n_p, n_lam = sys_.n_p, sys_.n_lam
    active = sys_.u_ids >= 0
    w_vec = W.coeffs[active].ravel()

    dt = sys_.dt
    rhs = sys_.G.T @ (w_vec + dt * sys_.g_hat / sys_.mass)
    rhs[n_p:] -= sys_.A
    w_bg = None
    if sys_.bg_ids is not None and sys_.D_bg is not None and sys_.D_bg.shape[1]:
        w_bg = W.coeffs[sys_.bg_ids >= 0].ravel()
        rhs[:n_p] -= sys_.D_bg @ w_bg
        rhs[n_p:] += sys_.B_bg @ w_bg
    deflate = np.ones(n_p + n_lam) if sys_.has_null_mode else None

    if max_iters is None:
        max_iters = 10 * (n_p + n_lam)
    S_unit = sys_.S_unit
    diag = dt * S_unit.diagonal()
    # target a fraction of the nominal tolerance: the residual-to-error
    # transfer through the Schur complement eats about one decade, and the
    # delivered solution must honor downstream uses of `tol` itself
    tol_eff = 0.05 * tol
    try:
        res = pcg(
            lambda v: dt * (S_unit @ v),
            rhs,
            diag=diag,
            tol=tol_eff,
            max_iters=max_iters,
            deflate=deflate,
            atol=0.1 * tol_eff,
            x0=x0 if x0 is not None and x0.size == n_p + n_lam else None,
        )
    except IndefiniteOperatorError as e:
        raise ProjectionError(f"Schur operator not SPD ({e}); assembly bug") from e
    if not res.converged:
        raise ProjectionError(
            f"projection CG exceeded {max_iters} iterations, residual {res.residual:.3e}"
        )
    x = res.x
    if sys_.has_null_mode and n_p:
        x = x - np.mean(x[:n_p])

    u_vec = w_vec + dt * (sys_.g_hat - sys_.G @ x) / sys_.mass
    div_bg = sys_.D_bg @ w_bg if w_bg is not None else 0.0
    div_u = float(np.max(np.abs(sys_.D @ u_vec + div_bg))) if n_p else 0.0
    div_w = float(np.max(np.abs(sys_.D @ w_vec + div_bg))) if n_p else 0.0

    out = W.copy()
    out.coeffs[active] = u_vec.reshape(-1, 2)
    p_nodal = np.zeros(sys_.p_ids.shape)
    p_nodal[sys_.p_ids >= 0] = x[:n_p]
    return ProjectionSolution(
        U=out,
        P=x[:n_p],
        Lambda=x[n_p:],
        x_full=x,
        pressure_nodal=p_nodal,
        iterations=res.iterations,
        residual=res.residual,
        div_residual=div_u,
        div_w=div_w,
    )


def dump_triplets(mat: sp.spmatrix, path):
    """Debug dump: `row col value` per line, sorted by (row, col)."""
    coo = mat.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")


def dump_system(system: ProjectionSystem, directory):
    import os

    os.makedirs(directory, exist_ok=True)
    dump_triplets(system.D, os.path.join(directory, "D.txt"))
    dump_triplets(system.B, os.path.join(directory, "B.txt"))
    dump_triplets(system.S.tocoo(), os.path.join(directory, "S.txt"))
    dump_triplets(
        sp.diags(system.m_diag).tocoo(), os.path.join(directory, "M.txt")
    )
