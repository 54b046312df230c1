# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; mirrors bslqb._pykernels function by function."""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, floor, hypot, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

cdef double CLAMP_EPS = 1e-9


cdef inline double _clampd(double v, double lo, double hi) noexcept:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef inline void _axis_weights(double xi, long* base, double* w, double* d) noexcept:
    cdef long b = <long>ceil(xi - 0.5)
    cdef double e = xi - b
    base[0] = b
    w[0] = 0.5 * (e - 0.5) * (e - 0.5)
    w[1] = 0.75 - e * e
    w[2] = 0.5 * (e + 0.5) * (e + 0.5)
    d[0] = e - 0.5
    d[1] = -2.0 * e
    d[2] = e + 0.5


cdef inline bint _in_region_c(double xi, long n) noexcept:
    return xi > 0.5 and xi <= n - 1.5


cdef inline void _eval_pt(const double[:, :, ::1] c, double xi, double yi,
                          double inv_dx, double* val, double* grad,
                          bint want_grad) noexcept:
    """Evaluate velocity (and optionally gradient) at grid coords (xi, yi)."""
    cdef long bx, by, a, b, k
    cdef double wx[3]
    cdef double dxw[3]
    cdef double wy[3]
    cdef double dyw[3]
    cdef double wgt, gx, gy, c0, c1
    _axis_weights(xi, &bx, wx, dxw)
    _axis_weights(yi, &by, wy, dyw)
    val[0] = 0.0
    val[1] = 0.0
    if want_grad:
        for k in range(4):
            grad[k] = 0.0
    for a in range(3):
        for b in range(3):
            c0 = c[bx - 1 + a, by - 1 + b, 0]
            c1 = c[bx - 1 + a, by - 1 + b, 1]
            wgt = wx[a] * wy[b]
            val[0] += wgt * c0
            val[1] += wgt * c1
            if want_grad:
                gx = dxw[a] * wy[b] * inv_dx
                gy = wx[a] * dyw[b] * inv_dx
                grad[0] += gx * c0
                grad[1] += gy * c0
                grad[2] += gx * c1
                grad[3] += gy * c1


def eval_velocity(const double[:, :, ::1] coeffs, double ox, double oy, double dx,
                  const double[:, ::1] pts, bint clamp=True):
    cdef long nx = coeffs.shape[0]
    cdef long ny = coeffs.shape[1]
    cdef long n = pts.shape[0]
    cdef cnp.ndarray out_arr = np.empty((n, 2))
    cdef double[:, ::1] out = out_arr
    cdef long i
    cdef double xi, yi
    cdef double val[2]
    for i in range(n):
        xi = (pts[i, 0] - ox) / dx - 0.5
        yi = (pts[i, 1] - oy) / dx - 0.5
        if clamp:
            xi = _clampd(xi, 0.5 + CLAMP_EPS, nx - 1.5)
            yi = _clampd(yi, 0.5 + CLAMP_EPS, ny - 1.5)
        else:
            if not _in_region_c(xi, nx):
                _raise_domain(xi, 0)
            if not _in_region_c(yi, ny):
                _raise_domain(yi, 1)
        _eval_pt(coeffs, xi, yi, 1.0 / dx, val, NULL, False)
        out[i, 0] = val[0]
        out[i, 1] = val[1]
    return out_arr


cdef _raise_domain(double xi, int axis):
    from .splines import DomainError
    raise DomainError(
        f"position with grid coordinate {xi!r} outside "
        f"interpolatable region on axis {axis}"
    )


def eval_velocity_grad(const double[:, :, ::1] coeffs, double ox, double oy,
                       double dx, const double[:, ::1] pts, bint clamp=True):
    cdef long nx = coeffs.shape[0]
    cdef long ny = coeffs.shape[1]
    cdef long n = pts.shape[0]
    cdef cnp.ndarray vals_arr = np.empty((n, 2))
    cdef cnp.ndarray grads_arr = np.empty((n, 2, 2))
    cdef double[:, ::1] vals = vals_arr
    cdef double[:, :, ::1] grads = grads_arr
    cdef long i
    cdef double xi, yi
    cdef double val[2]
    cdef double grad[4]
    for i in range(n):
        xi = (pts[i, 0] - ox) / dx - 0.5
        yi = (pts[i, 1] - oy) / dx - 0.5
        if clamp:
            xi = _clampd(xi, 0.5 + CLAMP_EPS, nx - 1.5)
            yi = _clampd(yi, 0.5 + CLAMP_EPS, ny - 1.5)
        else:
            if not _in_region_c(xi, nx):
                _raise_domain(xi, 0)
            if not _in_region_c(yi, ny):
                _raise_domain(yi, 1)
        _eval_pt(coeffs, xi, yi, 1.0 / dx, val, grad, True)
        vals[i, 0] = val[0]
        vals[i, 1] = val[1]
        grads[i, 0, 0] = grad[0]
        grads[i, 0, 1] = grad[1]
        grads[i, 1, 0] = grad[2]
        grads[i, 1, 1] = grad[3]
    return vals_arr, grads_arr


def explicit_nodes(const double[:, :, ::1] coeffs, double ox, double oy,
                   double dx, double dt):
    cdef long nx = coeffs.shape[0]
    cdef long ny = coeffs.shape[1]
    cdef cnp.ndarray w_arr = np.empty((nx, ny, 2))
    cdef cnp.ndarray off_arr = np.zeros((nx, ny), dtype=bool)
    cdef cnp.ndarray u0_arr = np.empty((nx, ny, 2))
    cdef double[:, :, ::1] w = w_arr
    cdef double[:, :, ::1] u0v = u0_arr
    cdef cnp.uint8_t[:, ::1] off = off_arr.view(np.uint8)
    cdef long i, j
    cdef double cx, cy, xi, yi, yx, yy
    cdef double lox = 0.5 + CLAMP_EPS
    cdef double val[2]
    for i in range(nx):
        cx = ox + (i + 0.5) * dx
        for j in range(ny):
            cy = oy + (j + 0.5) * dx
            xi = (cx - ox) / dx - 0.5
            yi = (cy - oy) / dx - 0.5
            if not (_in_region_c(xi, nx) and _in_region_c(yi, ny)):
                off[i, j] = 1
                xi = _clampd(xi, lox, nx - 1.5)
                yi = _clampd(yi, lox, ny - 1.5)
            _eval_pt(coeffs, xi, yi, 1.0 / dx, val, NULL, False)
            u0v[i, j, 0] = val[0]
            u0v[i, j, 1] = val[1]
            yx = (cx - dt * val[0] - ox) / dx - 0.5
            yy = (cy - dt * val[1] - oy) / dx - 0.5
            if not (_in_region_c(yx, nx) and _in_region_c(yy, ny)):
                off[i, j] = 1
                yx = _clampd(yx, lox, nx - 1.5)
                yy = _clampd(yy, lox, ny - 1.5)
            _eval_pt(coeffs, yx, yy, 1.0 / dx, val, NULL, False)
            w[i, j, 0] = val[0]
            w[i, j, 1] = val[1]
    return w_arr, off_arr, u0_arr


def bslqb_nodes(const double[:, :, ::1] coeffs, double ox, double oy, double dx,
                double dt, double tol, int max_iters):
    cdef long nx = coeffs.shape[0]
    cdef long ny = coeffs.shape[1]
    w_arr, off_arr, _ = explicit_nodes(coeffs, ox, oy, dx, dt)
    cdef cnp.ndarray wsl_arr = w_arr.copy()
    cdef cnp.ndarray it_arr = np.zeros((nx, ny), dtype=np.int32)
    cdef cnp.ndarray conv_arr = np.zeros((nx, ny), dtype=bool)
    cdef cnp.ndarray fb_arr = np.zeros((nx, ny), dtype=bool)
    cdef double[:, :, ::1] w = w_arr
    cdef double[:, :, ::1] wsl = wsl_arr
    cdef cnp.int32_t[:, ::1] iters = it_arr
    cdef cnp.uint8_t[:, ::1] conv = conv_arr.view(np.uint8)
    cdef cnp.uint8_t[:, ::1] fb = fb_arr.view(np.uint8)
    cdef cnp.uint8_t[:, ::1] off = off_arr.view(np.uint8)
    cdef long i, j
    cdef int k
    cdef double cx, cy, wx0, wy0, yx, yy, rx, ry
    cdef double j00, j01, j10, j11, det
    cdef double val[2]
    cdef double grad[4]
    for i in range(nx):
        cx = ox + (i + 0.5) * dx
        for j in range(ny):
            cy = oy + (j + 0.5) * dx
            wx0 = w[i, j, 0]
            wy0 = w[i, j, 1]
            for k in range(1, max_iters + 1):
                yx = (cx - dt * wx0 - ox) / dx - 0.5
                yy = (cy - dt * wy0 - oy) / dx - 0.5
                if not (_in_region_c(yx, nx) and _in_region_c(yy, ny)):
                    fb[i, j] = 1
                    off[i, j] = 1
                    iters[i, j] = k
                    wx0 = wsl[i, j, 0]
                    wy0 = wsl[i, j, 1]
                    break
                _eval_pt(coeffs, yx, yy, 1.0 / dx, val, grad, True)
                rx = val[0] - wx0
                ry = val[1] - wy0
                if hypot(rx, ry) <= tol:
                    conv[i, j] = 1
                    iters[i, j] = k
                    break
                j00 = 1.0 + dt * grad[0]
                j01 = dt * grad[1]
                j10 = dt * grad[2]
                j11 = 1.0 + dt * grad[3]
                det = j00 * j11 - j01 * j10
                if fabs(det) < 1e-12:
                    fb[i, j] = 1
                    iters[i, j] = k
                    wx0 = wsl[i, j, 0]
                    wy0 = wsl[i, j, 1]
                    break
                wx0 += (j11 * rx - j01 * ry) / det
                wy0 += (-j10 * rx + j00 * ry) / det
            else:
                fb[i, j] = 1
                iters[i, j] = max_iters
                wx0 = wsl[i, j, 0]
                wy0 = wsl[i, j, 1]
            w[i, j, 0] = wx0
            w[i, j, 1] = wy0
    return w_arr, it_arr, conv_arr, fb_arr, off_arr


def p2g(const double[:, ::1] px, const double[::1] mass,
        const double[:, ::1] vel, const double[:, :, ::1] cmat,
        double ox, double oy, double dx, long nx, long ny):
    cdef cnp.ndarray num_arr = np.zeros((nx, ny, 2))
    cdef cnp.ndarray den_arr = np.zeros((nx, ny))
    cdef double[:, :, ::1] num = num_arr
    cdef double[:, ::1] den = den_arr
    cdef long n = px.shape[0]
    cdef long p, a, b, gi, gj, bx, by
    cdef double xi, yi, wgt, xj, yj, rx, ry, ux, uy, m
    cdef double wx[3]
    cdef double wy[3]
    cdef double dummy[3]
    for p in range(n):
        xi = (px[p, 0] - ox) / dx - 0.5
        yi = (px[p, 1] - oy) / dx - 0.5
        _axis_weights(xi, &bx, wx, dummy)
        _axis_weights(yi, &by, wy, dummy)
        m = mass[p]
        for a in range(3):
            gi = bx - 1 + a
            if gi < 0 or gi >= nx:
                continue
            for b in range(3):
                gj = by - 1 + b
                if gj < 0 or gj >= ny:
                    continue
                wgt = m * wx[a] * wy[b]
                xj = ox + (gi + 0.5) * dx
                yj = oy + (gj + 0.5) * dx
                rx = xj - px[p, 0]
                ry = yj - px[p, 1]
                ux = vel[p, 0] + cmat[p, 0, 0] * rx + cmat[p, 0, 1] * ry
                uy = vel[p, 1] + cmat[p, 1, 0] * rx + cmat[p, 1, 1] * ry
                den[gi, gj] += wgt
                num[gi, gj, 0] += wgt * ux
                num[gi, gj, 1] += wgt * uy
    return num_arr, den_arr


def sample_linear(const double[:, ::1] nodal, double ox, double oy, double dx,
                  const double[:, ::1] pts):
    cdef long mx = nodal.shape[0]
    cdef long my = nodal.shape[1]
    cdef long n = pts.shape[0]
    cdef cnp.ndarray out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef long i, bx, by
    cdef double zx, zy, tx, ty
    for i in range(n):
        zx = _clampd((pts[i, 0] - ox) / dx, 0.0, mx - 1.0)
        zy = _clampd((pts[i, 1] - oy) / dx, 0.0, my - 1.0)
        bx = <long>floor(zx)
        if bx > mx - 2:
            bx = mx - 2
        by = <long>floor(zy)
        if by > my - 2:
            by = my - 2
        tx = zx - bx
        ty = zy - by
        out[i] = (nodal[bx, by] * (1 - tx) * (1 - ty)
                  + nodal[bx + 1, by] * tx * (1 - ty)
                  + nodal[bx, by + 1] * (1 - tx) * ty
                  + nodal[bx + 1, by + 1] * tx * ty)
    return out_arr


def redistance_sweeps(dist_obj, frozen_obj, double dx, int passes):
    """Sequential Gauss-Seidel fast sweeping, four directions per pass."""
    cdef cnp.ndarray dist_arr = dist_obj
    cdef double[:, ::1] dist = dist_arr
    cdef cnp.uint8_t[:, ::1] frozen = frozen_obj.view(np.uint8)
    cdef long mx = dist.shape[0]
    cdef long my = dist.shape[1]
    cdef long i, j
    cdef int p, sx, sy, d
    cdef long i0, i1, istep, j0, j1, jstep
    cdef double a, b, lo, diff, u, left, right, down, up
    cdef double big = np.inf
    for p in range(passes):
        for d in range(4):
            sx = 1 if d < 2 else -1
            sy = 1 if d % 2 == 0 else -1
            i0 = 0 if sx == 1 else mx - 1
            i1 = mx if sx == 1 else -1
            j0 = 0 if sy == 1 else my - 1
            j1 = my if sy == 1 else -1
            i = i0
            while i != i1:
                j = j0
                while j != j1:
                    if not frozen[i, j]:
                        left = dist[i - 1, j] if i > 0 else big
                        right = dist[i + 1, j] if i < mx - 1 else big
                        down = dist[i, j - 1] if j > 0 else big
                        up = dist[i, j + 1] if j < my - 1 else big
                        a = left if left < right else right
                        b = down if down < up else up
                        lo = a if a < b else b
                        diff = fabs(a - b)
                        if diff >= dx:
                            u = lo + dx
                        else:
                            u = 0.5 * (a + b + sqrt(max(2 * dx * dx - diff * diff, 0.0)))
                        if u < dist[i, j]:
                            dist[i, j] = u
                    j += sy
                i += sx
    return dist_arr


def particles_to_levelset(const double[:, ::1] px, double r_p, double ox,
                          double oy, double dx, long mx, long my, double far):
    cdef cnp.ndarray phi_arr = np.full((mx, my), far)
    cdef double[:, ::1] phi = phi_arr
    cdef long n = px.shape[0]
    cdef long p, bx, by, a, b, gi, gj
    cdef double zx, zy, nxp, nyp, v
    for p in range(n):
        zx = (px[p, 0] - ox) / dx
        zy = (px[p, 1] - oy) / dx
        bx = <long>floor(zx + 0.5)
        by = <long>floor(zy + 0.5)
        for a in range(-3, 4):
            gi = bx + a
            if gi < 0 or gi >= mx:
                continue
            for b in range(-3, 4):
                gj = by + b
                if gj < 0 or gj >= my:
                    continue
                nxp = ox + gi * dx - px[p, 0]
                nyp = oy + gj * dx - px[p, 1]
                v = hypot(nxp, nyp) - r_p
                if v < phi[gi, gj]:
                    phi[gi, gj] = v
    return phi_arr
