import numpy as np
import pytest

from bslqb.advect import (
    AdvectionParams,
    RecoveryError,
    advect_field,
    advect_levelset,
    assemble_recovery_matrix,
    bslqb_node_solve,
    explicit_sl_node,
    recover_coefficients,
)
from bslqb.grid import GridDesc, VelocityField


def make_grid(n=32, dx=None):
    dx = dx or 1.0 / n
    return GridDesc((n, n), dx, (0.0, 0.0))


def field_from(grid, fn):
    pts = grid.cell_center_points()
    vals = np.asarray(fn(pts))
    return VelocityField(grid, vals.reshape(grid.cells[0], grid.cells[1], 2))


def const_field(grid, c):
    return field_from(grid, lambda p: np.tile(c, (len(p), 1)))


def test_explicit_sl_trivials():
    g = make_grid()
    zero = VelocityField(g)
    x = g.cell_center(13, 17)
    np.testing.assert_allclose(explicit_sl_node(zero, x, 0.1), 0.0, atol=1e-15)
    c = const_field(g, [0.7, -0.4])
    np.testing.assert_allclose(
        explicit_sl_node(c, x, 0.2), [0.7, -0.4], atol=1e-14
    )


def test_explicit_sl_linear_burgers_one_step():
    # u(x) = a x carried explicitly: w = a x (1 - a dt), an O(dt^2) gap to
    # the exact a x / (1 + a dt)
    g = make_grid(64)
    a, dt = 0.8, 0.05
    f = field_from(g, lambda p: np.stack([a * p[:, 0], np.zeros(len(p))], axis=1))
    x = g.cell_center(30, 30)
    w = explicit_sl_node(f, x, dt)
    assert w[0] == pytest.approx(a * x[0] * (1 - a * dt), abs=1e-12)
    exact = a * x[0] / (1 + a * dt)
    assert abs(w[0] - exact) == pytest.approx(
        a * x[0] * a**2 * dt**2 / (1 + a * dt), abs=1e-10
    )


def test_bslqb_constant_field_converges_first_pass():
    g = make_grid()
    f = const_field(g, [1.0, 2.0])
    w, rep = bslqb_node_solve(f, g.cell_center(10, 10), 0.05, AdvectionParams())
    np.testing.assert_allclose(w, [1.0, 2.0], atol=1e-13)
    assert rep.iterations == 1 and rep.converged and not rep.used_fallback


def test_bslqb_1d_linear_exact_burgers():
    g = make_grid(64)
    a, dt = 0.9, 0.04
    f = field_from(g, lambda p: np.stack([a * p[:, 0], np.zeros(len(p))], axis=1))
    x = g.cell_center(40, 31)
    params = AdvectionParams(newton_tol=1e-13)
    w, rep = bslqb_node_solve(f, x, dt, params)
    assert rep.converged and not rep.used_fallback
    assert w[0] == pytest.approx(a * x[0] / (1 + a * dt), abs=1e-12)


def test_bslqb_2d_linear_matrix_closed_form():
    g = make_grid(48)
    rng = np.random.default_rng(8)
    dt = 0.03
    for _ in range(5):
        A = rng.normal(scale=0.6, size=(2, 2))
        f = field_from(g, lambda p: p @ A.T)
        x = g.cell_center(24, 25)
        w, rep = bslqb_node_solve(f, x, dt, AdvectionParams(newton_tol=1e-13))
        exact = np.linalg.solve(np.eye(2) + dt * A, A @ x)
        assert rep.converged
        np.testing.assert_allclose(w, exact, atol=1e-11)


def test_node_solve_iteration_count_small():
    # smooth field, CFL ~ 4: Newton should converge in a handful of steps
    g = make_grid(64)

    def fn(p):
        w = np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
        return np.stack(
            [np.sin(2 * np.pi * p[:, 1]) * w, np.cos(2 * np.pi * p[:, 0]) * w],
            axis=1,
        )

    f = field_from(g, fn)
    vmax = f.max_speed()
    dt = 4 * g.dx / vmax
    reports = []
    for i in range(8, 56, 7):
        for j in range(8, 56, 7):
            _, rep = bslqb_node_solve(f, g.cell_center(i, j), dt, AdvectionParams())
            reports.append(rep)
    assert all(r.converged for r in reports)
    assert np.mean([r.iterations for r in reports]) <= 5


def test_recover_lambda_zero_is_identity():
    g = make_grid(16)
    rng = np.random.default_rng(2)
    nodal = rng.normal(size=(16, 16, 2))
    bc = rng.normal(size=(16, 16, 2))
    out = recover_coefficients(nodal, g, AdvectionParams(lam=0.0), bc)
    np.testing.assert_array_equal(out.coeffs[1:-1, 1:-1], nodal[1:-1, 1:-1])
    np.testing.assert_array_equal(out.coeffs[0, :], bc[0, :])


def test_recover_constant_any_lambda():
    g = make_grid(16)
    c = np.tile([2.0, -1.0], (16, 16, 1))
    for lam in (0.25, 0.6, 1.0):
        out = recover_coefficients(c.copy(), g, AdvectionParams(lam=lam), c.copy())
        np.testing.assert_allclose(out.coeffs, c, atol=1e-13)


def test_recover_roundtrip_lambda_one():
    g = make_grid(24)
    rng = np.random.default_rng(4)
    coeffs = rng.normal(size=(24, 24, 2))
    f = VelocityField(g, coeffs)
    nodal = np.zeros_like(coeffs)
    pts = g.cell_center_points().reshape(24, 24, 2)
    nodal[1:-1, 1:-1] = f.eval(pts[1:-1, 1:-1].reshape(-1, 2)).reshape(22, 22, 2)
    out = recover_coefficients(nodal, g, AdvectionParams(lam=1.0), coeffs)
    assert np.max(np.abs(out.coeffs - coeffs)) <= 1e-10


def test_recovery_matrix_properties():
    g = make_grid(12)
    A_int, A_ring = assemble_recovery_matrix(g, 1.0)
    d = (A_int - A_int.T).tocoo()
    assert np.max(np.abs(d.data)) if d.nnz else 0.0 <= 1e-15
    assert np.all(A_int.data >= 0) and np.all(A_ring.data >= 0)
    row_sums = np.asarray(A_int.sum(axis=1)).ravel() + np.asarray(
        A_ring.sum(axis=1)
    ).ravel()
    np.testing.assert_allclose(row_sums, 1.0, atol=1e-14)


def test_recovery_nonconvergence_raises():
    g = make_grid(16)
    nodal = np.ones((16, 16, 2))
    with pytest.raises(RecoveryError, match="residual"):
        recover_coefficients(
            nodal, g, AdvectionParams(lam=1.0, cg_tol=1e-30, max_cg_iters=1), nodal
        )


def test_advect_field_trivials():
    g = make_grid(16)
    params = AdvectionParams()
    zero = VelocityField(g)
    out, _ = advect_field(zero, 0.1, params)
    np.testing.assert_allclose(out.coeffs, 0.0, atol=1e-14)
    c = const_field(g, [0.4, 0.1])
    out, stats = advect_field(c, 0.02, params)
    np.testing.assert_allclose(out.coeffs, c.coeffs, atol=1e-12)
    assert stats.fallback_fraction == 0.0


def exact_quadratic_burgers(pts, t, A):
    """Oracle for u0 = (s0, s0), s0 = x^T A x: solves the scalar implicit
    relation s = s0(x - t s) by Newton, independent of any grid."""
    s = np.einsum("ni,ij,nj->n", pts, A, pts)
    for _ in range(100):
        y = pts - t * s[:, None]
        f = s - np.einsum("ni,ij,nj->n", y, A, y)
        grad = 2.0 * y @ A
        fp = 1.0 + t * (grad[:, 0] + grad[:, 1])
        step = f / fp
        s = s - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return np.stack([s, s], axis=1)


def burgers_matrix():
    r = 0.1
    R = np.array([[np.cos(r), -np.sin(r)], [np.sin(r), np.cos(r)]])
    return R @ np.diag([1.0, 0.25]) @ R.T


def run_burgers(n, scheme, lam, T=0.25):
    g = make_grid(n)
    A = burgers_matrix()
    f = field_from(g, lambda p: np.stack([
        np.einsum("ni,ij,nj->n", p, A, p)] * 2, axis=1))
    params = AdvectionParams(lam=lam, scheme=scheme)
    bc = lambda pts, t: exact_quadratic_burgers(pts, t, A)
    dt = g.dx
    steps = int(round(T / dt))
    t = 0.0
    for _ in range(steps):
        f, _ = advect_field(f, dt, params, boundary=bc, t=t)
        t += dt
    pts = g.cell_center_points().reshape(n, n, 2)[1:-1, 1:-1].reshape(-1, 2)
    err = f.eval(pts) - exact_quadratic_burgers(pts, t, A)
    return float(np.max(np.abs(err)))


def test_burgers_convergence_slopes_coarse():
    # three levels keep this quick; the acceptance suite runs the full sweep
    dxs = np.array([1.0 / 16, 1.0 / 32, 1.0 / 64])
    e_sl = [run_burgers(int(1 / h), "sl", 1.0) for h in dxs]
    e_qb = [run_burgers(int(1 / h), "bslqb", 1.0) for h in dxs]
    s_sl = np.polyfit(np.log(dxs), np.log(e_sl), 1)[0]
    s_qb = np.polyfit(np.log(dxs), np.log(e_qb), 1)[0]
    assert 0.7 <= s_sl <= 1.4
    assert s_qb >= 1.6


def test_bslqb_exact_on_linear_fields():
    # affine data is reproduced to solver precision (the spline space and
    # the implicit solve are both exact there)
    n = 32
    g = make_grid(n)
    A = 0.5 * burgers_matrix()
    f = field_from(g, lambda p: p @ A.T)
    dt = g.dx
    bc = lambda pts, t: np.linalg.solve(np.eye(2) + t * A, (pts @ A.T).T).T
    t = 0.0
    params = AdvectionParams(newton_tol=1e-13)
    for _ in range(8):
        f, _ = advect_field(f, dt, params, boundary=bc, t=t)
        t += dt
    pts = g.cell_center_points().reshape(n, n, 2)[2:-2, 2:-2].reshape(-1, 2)
    exact = np.linalg.solve(np.eye(2) + t * A, (pts @ A.T).T).T
    assert np.max(np.abs(f.eval(pts) - exact)) <= 1e-8


def test_advect_levelset_trivials():
    g = make_grid(16)
    nodes = g.node_points()
    phi = (nodes[:, 0] * 2.0 + nodes[:, 1] * 0.5).reshape(g.node_counts)
    w = np.zeros(g.node_counts + (2,))
    np.testing.assert_array_equal(advect_levelset(phi, w, 0.2, g), phi)
    # uniform motion shifts a linear field exactly (away from the clamp)
    w[:, :, 0] = 0.5
    w[:, :, 1] = -0.25
    out = advect_levelset(phi, w, 0.1, g)
    shifted = ((nodes[:, 0] - 0.05) * 2.0 + (nodes[:, 1] + 0.025) * 0.5).reshape(
        g.node_counts
    )
    np.testing.assert_allclose(out[2:-2, 2:-2], shifted[2:-2, 2:-2], atol=1e-13)


def test_advect_levelset_rotation_self_convergence():
    errs = []
    for n in (32, 64):
        g = make_grid(n)
        nodes = g.node_points()
        c = np.array([0.5, 0.5])
        phi0 = (np.hypot(nodes[:, 0] - 0.65, nodes[:, 1] - 0.5) - 0.15).reshape(
            g.node_counts
        )
        omega = 2 * np.pi
        w = np.stack(
            [-(nodes[:, 1] - c[1]) * omega, (nodes[:, 0] - c[0]) * omega], axis=1
        ).reshape(g.node_counts + (2,))
        steps = 8 * n
        dt = 1.0 / steps  # one full revolution
        phi = phi0.copy()
        for _ in range(steps):
            phi = advect_levelset(phi, w, dt, g)
        # L1 error in a band around the interface, interior only
        mask = np.abs(phi0) < 0.1
        errs.append(float(np.mean(np.abs(phi - phi0)[mask])))
    assert errs[1] < errs[0] < 0.15
