"""Vectorized numpy implementations of the hot kernels.

This is the fallback backend; bslqb._ckernels mirrors the same function
surface in Cython. Both produce matching results (see the backend
equivalence tests), so selection is purely a speed concern.

Conventions shared by every kernel:
  * velocity coefficients live at cell centers, coeffs has shape (nx, ny, 2)
  * nodal scalars live on grid nodes, shape (nx+1, ny+1)
  * the quadratic stencil base index is ceil(xi - 1/2) (ties round toward
    -inf), valid bases are 1..n-2, so the interpolatable region per axis is
    origin + (dx, (n-1) dx]
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_CLAMP_EPS = 1e-9  # cells, keeps clamped points strictly interpolatable


def _quad_axis_weights(xi):
    """Per-axis stencil (base, values (N,3), derivatives (N,3)).

    Using the closed-form branch polynomials for the three offsets around
    the base avoids branch masks entirely: for e = xi - base in (-1/2, 1/2]
    the offsets land in fixed branch intervals.
    """
    base = np.ceil(xi - 0.5).astype(np.int64)
    e = xi - base
    w = np.empty(xi.shape + (3,))
    d = np.empty_like(w)
    w[..., 0] = 0.5 * (e - 0.5) ** 2
    w[..., 1] = 0.75 - e * e
    w[..., 2] = 0.5 * (e + 0.5) ** 2
    d[..., 0] = e - 0.5
    d[..., 1] = -2.0 * e
    d[..., 2] = e + 0.5
    return base, w, d


def _check_or_clamp(xi, n, clamp, axis):
    lo = 0.5 + _CLAMP_EPS
    hi = n - 1.5
    if clamp:
        return np.clip(xi, lo, hi)
    bad = (xi <= 0.5) | (xi > hi)
    if np.any(bad):
        from .splines import DomainError

        i = int(np.argmax(bad))
        raise DomainError(
            f"position with grid coordinate {float(xi[i])!r} outside "
            f"interpolatable region on axis {axis}"
        )
    return xi


def _gather_setup(coeffs, ox, oy, dx, pts, clamp):
    nx, ny = coeffs.shape[0], coeffs.shape[1]
    xi = _check_or_clamp((pts[:, 0] - ox) / dx - 0.5, nx, clamp, 0)
    yi = _check_or_clamp((pts[:, 1] - oy) / dx - 0.5, ny, clamp, 1)
    bx, wx, dxw = _quad_axis_weights(xi)
    by, wy, dyw = _quad_axis_weights(yi)
    # (N,3,3,2) coefficient gather
    gx = bx[:, None] + np.arange(-1, 2)
    gy = by[:, None] + np.arange(-1, 2)
    c = coeffs[gx[:, :, None], gy[:, None, :]]
    return c, wx, wy, dxw, dyw


def eval_velocity(coeffs, ox, oy, dx, pts, clamp=True):
    c, wx, wy, _, _ = _gather_setup(coeffs, ox, oy, dx, pts, clamp)
    w = wx[:, :, None] * wy[:, None, :]
    return np.einsum("nab,nabk->nk", w, c)


def eval_velocity_grad(coeffs, ox, oy, dx, pts, clamp=True):
    c, wx, wy, dxw, dyw = _gather_setup(coeffs, ox, oy, dx, pts, clamp)
    w = wx[:, :, None] * wy[:, None, :]
    gwx = dxw[:, :, None] * wy[:, None, :] / dx
    gwy = wx[:, :, None] * dyw[:, None, :] / dx
    vals = np.einsum("nab,nabk->nk", w, c)
    grads = np.empty((pts.shape[0], 2, 2))
    grads[:, :, 0] = np.einsum("nab,nabk->nk", gwx, c)
    grads[:, :, 1] = np.einsum("nab,nabk->nk", gwy, c)
    return vals, grads


def _in_region(pts, ox, oy, dx, nx, ny):
    xi = (pts[:, 0] - ox) / dx - 0.5
    yi = (pts[:, 1] - oy) / dx - 0.5
    return (xi > 0.5) & (xi <= nx - 1.5) & (yi > 0.5) & (yi <= ny - 1.5)


def cell_centers(ox, oy, dx, nx, ny):
    cx = ox + (np.arange(nx) + 0.5) * dx
    cy = oy + (np.arange(ny) + 0.5) * dx
    pts = np.empty((nx * ny, 2))
    pts[:, 0] = np.repeat(cx, ny)
    pts[:, 1] = np.tile(cy, nx)
    return pts


def explicit_nodes(coeffs, ox, oy, dx, dt):
    """Explicit semi-Lagrangian update at every cell center.

    Returns (w, offgrid) where offgrid marks nodes whose evaluation point
    (the node itself or the upwind point) had to be clamped.
    """
    nx, ny = coeffs.shape[0], coeffs.shape[1]
    pts = cell_centers(ox, oy, dx, nx, ny)
    offgrid = ~_in_region(pts, ox, oy, dx, nx, ny)
    u0 = eval_velocity(coeffs, ox, oy, dx, pts, clamp=True)
    y = pts - dt * u0
    offgrid |= ~_in_region(y, ox, oy, dx, nx, ny)
    w = eval_velocity(coeffs, ox, oy, dx, y, clamp=True)
    return (
        w.reshape(nx, ny, 2),
        offgrid.reshape(nx, ny),
        u0.reshape(nx, ny, 2),
    )


def bslqb_nodes(coeffs, ox, oy, dx, dt, tol, max_iters):
    """Newton solve of w = u(x_i - dt*w) at every cell center.

    Falls back to the explicit semi-Lagrangian value when the characteristic
    leaves the interpolatable region, the 2x2 Jacobian is near singular
    (|det| < 1e-12), or the iteration fails to converge.

    Returns (w, iters, converged, fallback, offgrid).
    """
    nx, ny = coeffs.shape[0], coeffs.shape[1]
    n = nx * ny
    pts = cell_centers(ox, oy, dx, nx, ny)
    w_sl, offgrid_arr, _ = explicit_nodes(coeffs, ox, oy, dx, dt)
    w_sl = w_sl.reshape(n, 2)
    offgrid = offgrid_arr.reshape(n).copy()

    w = w_sl.copy()
    iters = np.zeros(n, dtype=np.int32)
    converged = np.zeros(n, dtype=bool)
    fallback = np.zeros(n, dtype=bool)
    active = np.arange(n)

    for k in range(1, max_iters + 1):
        if active.size == 0:
            break
        y = pts[active] - dt * w[active]
        inside = _in_region(y, ox, oy, dx, nx, ny)
        exited = active[~inside]
        if exited.size:
            fallback[exited] = True
            offgrid[exited] = True
            iters[exited] = k
            w[exited] = w_sl[exited]
            active = active[inside]
            y = y[inside]
            if active.size == 0:
                break
        vals, grads = eval_velocity_grad(coeffs, ox, oy, dx, y, clamp=False)
        r = vals - w[active]
        done = np.hypot(r[:, 0], r[:, 1]) <= tol
        hit = active[done]
        converged[hit] = True
        iters[hit] = k
        keep = ~done
        active = active[keep]
        if active.size == 0:
            break
        r = r[keep]
        J = grads[keep] * dt
        J[:, 0, 0] += 1.0
        J[:, 1, 1] += 1.0
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        sing = np.abs(det) < 1e-12
        bad = active[sing]
        if bad.size:
            fallback[bad] = True
            iters[bad] = k
            w[bad] = w_sl[bad]
            ok = ~sing
            active = active[ok]
            r = r[ok]
            J = J[ok]
            det = det[ok]
            if active.size == 0:
                break
        dwx = (J[:, 1, 1] * r[:, 0] - J[:, 0, 1] * r[:, 1]) / det
        dwy = (-J[:, 1, 0] * r[:, 0] + J[:, 0, 0] * r[:, 1]) / det
        w[active, 0] += dwx
        w[active, 1] += dwy

    if active.size:
        fallback[active] = True
        iters[active] = max_iters
        w[active] = w_sl[active]

    shape = (nx, ny)
    return (
        w.reshape(nx, ny, 2),
        iters.reshape(shape),
        converged.reshape(shape),
        fallback.reshape(shape),
        offgrid.reshape(shape),
    )


def p2g(px, mass, vel, cmat, ox, oy, dx, nx, ny):
    """APIC particle-to-grid accumulation.

    Returns (num, den): num[j] = sum_p m_p N_j(x_p) (v_p + C_p (x_j - x_p)),
    den[j] = sum_p m_p N_j(x_p). Stencil cells falling off the grid are
    dropped (particles are normally clamped so this is a guard).
    """
    n = px.shape[0]
    numx = np.zeros(nx * ny)
    numy = np.zeros(nx * ny)
    den = np.zeros(nx * ny)
    if n == 0:
        return (
            np.stack([numx, numy], axis=-1).reshape(nx, ny, 2),
            den.reshape(nx, ny),
        )
    xi = (px[:, 0] - ox) / dx - 0.5
    yi = (px[:, 1] - oy) / dx - 0.5
    bx, wx, _ = _quad_axis_weights(xi)
    by, wy, _ = _quad_axis_weights(yi)
    offs = np.arange(-1, 2)
    ix = bx[:, None, None] + offs[None, :, None]
    iy = by[:, None, None] + offs[None, None, :]
    valid = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    w = wx[:, :, None] * wy[:, None, :] * mass[:, None, None]
    w = np.where(valid, w, 0.0)
    ixc = np.clip(ix, 0, nx - 1)
    iyc = np.clip(iy, 0, ny - 1)
    # affine evaluation at each stencil center
    xj = ox + (ixc + 0.5) * dx
    yj = oy + (iyc + 0.5) * dx
    rx = xj - px[:, 0, None, None]
    ry = yj - px[:, 1, None, None]
    ux = vel[:, 0, None, None] + cmat[:, 0, 0, None, None] * rx + cmat[:, 0, 1, None, None] * ry
    uy = vel[:, 1, None, None] + cmat[:, 1, 0, None, None] * rx + cmat[:, 1, 1, None, None] * ry
    flat = (ixc * ny + iyc).ravel()
    np.add.at(den, flat, w.ravel())
    np.add.at(numx, flat, (w * ux).ravel())
    np.add.at(numy, flat, (w * uy).ravel())
    return (
        np.stack([numx, numy], axis=-1).reshape(nx, ny, 2),
        den.reshape(nx, ny),
    )


def sample_linear(nodal, ox, oy, dx, pts):
    """Multilinear sampling of a nodal scalar field, clamped to the grid box."""
    mx, my = nodal.shape
    zx = np.clip((pts[:, 0] - ox) / dx, 0.0, mx - 1.0)
    zy = np.clip((pts[:, 1] - oy) / dx, 0.0, my - 1.0)
    bx = np.minimum(np.floor(zx).astype(np.int64), mx - 2)
    by = np.minimum(np.floor(zy).astype(np.int64), my - 2)
    tx = zx - bx
    ty = zy - by
    f00 = nodal[bx, by]
    f10 = nodal[bx + 1, by]
    f01 = nodal[bx, by + 1]
    f11 = nodal[bx + 1, by + 1]
    return (
        f00 * (1 - tx) * (1 - ty)
        + f10 * tx * (1 - ty)
        + f01 * (1 - tx) * ty
        + f11 * tx * ty
    )


def redistance_sweeps(dist, frozen, dx, passes):
    """Fast-sweeping Godunov solve of |grad d| = 1 on unsigned distances.

    dist is modified in place; frozen nodes are never touched. The four
    directional Gauss-Seidel sweeps are vectorized over anti-diagonal
    wavefronts, which reproduces the sequential sweep exactly (nodes on a
    wavefront only read already-swept or stale-by-design neighbors).
    """
    mx, my = dist.shape
    free = ~frozen
    diags = []
    for k in range(mx + my - 1):
        i = np.arange(max(0, k - my + 1), min(mx, k + 1))
        diags.append((i, k - i))
    big = np.inf
    for _ in range(passes):
        for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            d = dist[::sx, ::sy]
            m = free[::sx, ::sy]
            for i, j in diags:
                sel = m[i, j]
                if not sel.any():
                    continue
                ii = i[sel]
                jj = j[sel]
                left = np.where(ii > 0, d[np.maximum(ii - 1, 0), jj], big)
                right = np.where(ii < mx - 1, d[np.minimum(ii + 1, mx - 1), jj], big)
                down = np.where(jj > 0, d[ii, np.maximum(jj - 1, 0)], big)
                up = np.where(jj < my - 1, d[ii, np.minimum(jj + 1, my - 1)], big)
                a = np.minimum(left, right)
                b = np.minimum(down, up)
                lo = np.minimum(a, b)
                diff = np.abs(a - b)
                u = np.where(
                    diff >= dx,
                    lo + dx,
                    0.5 * (a + b + np.sqrt(np.maximum(2 * dx * dx - diff * diff, 0.0))),
                )
                d[ii, jj] = np.minimum(d[ii, jj], u)
    return dist


def particles_to_levelset(px, r_p, ox, oy, dx, mx, my, far):
    """Union-of-balls level set: phi(node) = min_p |node - x_p| - r_p.

    Only nodes within a 3-cell stencil of some particle are written; the
    rest keep the far value.
    """
    phi = np.full((mx, my), far)
    n = px.shape[0]
    if n == 0:
        return phi
    zx = (px[:, 0] - ox) / dx
    zy = (px[:, 1] - oy) / dx
    # floor(z + 1/2): same half-up rule as the compiled backend
    bx = np.floor(zx + 0.5).astype(np.int64)
    by = np.floor(zy + 0.5).astype(np.int64)
    offs = np.arange(-3, 4)
    ix = bx[:, None, None] + offs[None, :, None]
    iy = by[:, None, None] + offs[None, None, :]
    valid = (ix >= 0) & (ix < mx) & (iy >= 0) & (iy < my)
    ixc = np.clip(ix, 0, mx - 1)
    iyc = np.clip(iy, 0, my - 1)
    nxp = ox + ixc * dx - px[:, 0, None, None]
    nyp = oy + iyc * dx - px[:, 1, None, None]
    val = np.hypot(nxp, nyp) - r_p
    val = np.where(valid, val, np.inf)
    flat = (ixc * my + iyc).ravel()
    np.minimum.at(phi.ravel(), flat, val.ravel())
    return phi
