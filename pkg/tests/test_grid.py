import numpy as np
import pytest

from bslqb.grid import (
    DomainError,
    GridDesc,
    PressureField,
    VelocityField,
    eval_pressure,
    eval_velocity,
    eval_velocity_gradient,
)


def make_grid():
    return GridDesc((20, 14), 1.0 / 16, (0.0, 0.0))


def affine_field(grid, A, b):
    pts = grid.cell_center_points()
    vals = pts @ A.T + b
    return VelocityField(grid, vals.reshape(grid.cells[0], grid.cells[1], 2))


def interior_points(grid, n, rng, margin=0.0):
    lo, hi = grid.interp_bounds()
    return rng.uniform(lo + 1e-6 + margin, hi - margin, size=(n, 2))


def test_grid_validation():
    with pytest.raises(ValueError):
        GridDesc((3, 8), 0.1)
    with pytest.raises(ValueError):
        GridDesc((8, 8), -0.1)


def test_constant_field():
    g = make_grid()
    f = VelocityField(g, np.tile([1.5, -2.0], (g.cells[0], g.cells[1], 1)))
    pts = interior_points(g, 50, np.random.default_rng(0))
    np.testing.assert_allclose(f.eval(pts), np.tile([1.5, -2.0], (50, 1)), atol=1e-14)
    _, grads = f.eval_grad(pts)
    np.testing.assert_allclose(grads, 0.0, atol=1e-13)


def test_affine_reproduction():
    g = make_grid()
    rng = np.random.default_rng(1)
    for _ in range(100):
        A = rng.normal(size=(2, 2))
        b = rng.normal(size=2)
        f = affine_field(g, A, b)
        pts = interior_points(g, 5, rng)
        exact = pts @ A.T + b
        np.testing.assert_allclose(f.eval(pts), exact, atol=1e-12)
        _, grads = f.eval_grad(pts)
        np.testing.assert_allclose(grads, np.tile(A, (5, 1, 1)), atol=1e-12)


def test_single_unit_coefficient():
    g = make_grid()
    c = np.zeros((g.cells[0], g.cells[1], 2))
    c[6, 6, 0] = 1.0
    f = VelocityField(g, c)
    v = eval_velocity(f, g.cell_center(6, 6))
    assert v[0] == pytest.approx(9.0 / 16.0, abs=1e-15)
    assert v[1] == 0.0


def test_gradient_matches_central_differences():
    g = make_grid()
    rng = np.random.default_rng(2)
    f = VelocityField(g, rng.normal(size=(g.cells[0], g.cells[1], 2)))
    h = 1e-5 * g.dx
    pts = interior_points(g, 40, rng, margin=2 * h)
    _, grads = f.eval_grad(pts)
    for axis in range(2):
        dp = pts.copy()
        dm = pts.copy()
        dp[:, axis] += h
        dm[:, axis] -= h
        fd = (f.eval(dp) - f.eval(dm)) / (2 * h)
        assert np.max(np.abs(grads[:, :, axis] - fd)) <= 1e-6


def test_out_of_range_raises():
    g = make_grid()
    f = VelocityField(g)
    with pytest.raises(DomainError, match="axis 0"):
        f.eval(np.array([[0.5 * g.dx, 0.5]]))
    with pytest.raises(DomainError, match="axis 1"):
        eval_velocity_gradient(f, (0.5, 1e9))


def test_pressure_hydrostatic_profile():
    g = make_grid()
    rho, grav, y0 = 1000.0, 9.8, 0.6
    nodes = g.node_points()
    vals = rho * grav * (y0 - nodes[:, 1])
    p = PressureField(g, vals.reshape(g.node_counts))
    rng = np.random.default_rng(3)
    lo = np.array(g.origin)
    hi = lo + np.array(g.cells) * g.dx
    pts = rng.uniform(lo, hi, size=(100, 2))
    exact = rho * grav * (y0 - pts[:, 1])
    np.testing.assert_allclose(p.eval(pts), exact, rtol=0, atol=1e-9 * rho * grav)


def test_pressure_interpolatory_and_constant():
    g = make_grid()
    rng = np.random.default_rng(4)
    vals = rng.normal(size=g.node_counts)
    p = PressureField(g, vals)
    # nodal values reproduced exactly
    for i, j in [(0, 0), (3, 5), (g.cells[0], g.cells[1])]:
        x = (g.origin[0] + i * g.dx, g.origin[1] + j * g.dx)
        assert eval_pressure(p, x) == pytest.approx(vals[i, j], abs=1e-13)
    pc = PressureField(g, np.full(g.node_counts, 3.25))
    pts = rng.uniform(g.origin, np.array(g.origin) + np.array(g.cells) * g.dx, (20, 2))
    np.testing.assert_allclose(pc.eval(pts), 3.25, atol=1e-14)
