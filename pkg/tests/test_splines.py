import numpy as np
import pytest

from bslqb.grid import GridDesc
from bslqb.splines import (
    DomainError,
    lin_kernel,
    pressure_stencil,
    quad_kernel,
    velocity_stencil,
)


def test_quad_kernel_branch_values():
    assert quad_kernel(0.0).value == 0.75
    assert quad_kernel(1.5).value == 0.0
    assert quad_kernel(1.5).derivative == 0.0
    assert quad_kernel(-1.5).value == 0.0
    # branch agreement at the knot
    assert quad_kernel(0.5).value == pytest.approx(0.5, abs=0)
    assert quad_kernel(0.5 + 1e-13).value == pytest.approx(0.5, abs=1e-12)
    assert quad_kernel(2.0).value == 0.0


def test_quad_kernel_c1_at_knots():
    # the derivative is piecewise linear, so 2 d(x -+ eps) - d(x -+ 2 eps)
    # recovers the exact one-sided limits at the knot
    eps = 1e-6
    for knot in (-1.5, -0.5, 0.5, 1.5):
        dm = 2 * quad_kernel(knot - eps).derivative - quad_kernel(knot - 2 * eps).derivative
        dp = 2 * quad_kernel(knot + eps).derivative - quad_kernel(knot + 2 * eps).derivative
        assert abs(dm - dp) <= 1e-9


def test_quad_kernel_derivative_is_branch_derivative():
    for eta in np.linspace(-1.49, 1.49, 37):
        h = 1e-7
        fd = (quad_kernel(eta + h).value - quad_kernel(eta - h).value) / (2 * h)
        assert quad_kernel(eta).derivative == pytest.approx(fd, abs=1e-8)


def test_lin_kernel():
    assert lin_kernel(0.0).value == 1.0
    assert lin_kernel(-1.0).value == 0.0
    assert lin_kernel(0.25).value == 0.75
    assert lin_kernel(1.0).value == 0.0
    assert lin_kernel(-0.5).value == 0.5


GRID = GridDesc((16, 12), 0.25, (-1.0, 2.0))


def test_velocity_stencil_at_cell_center():
    x = GRID.cell_center(5, 4)
    s = velocity_stencil(x, GRID)
    axis = np.array([0.125, 0.75, 0.125])
    assert s.base_index == (4, 3)
    np.testing.assert_allclose(s.weights, np.outer(axis, axis), atol=1e-15)


def test_velocity_stencil_partition_of_unity():
    rng = np.random.default_rng(7)
    lo, hi = GRID.interp_bounds()
    for _ in range(200):
        x = rng.uniform(lo + 1e-9, hi)
        s = velocity_stencil(x, GRID)
        assert abs(s.weights.sum() - 1.0) <= 1e-14
        assert np.all(s.weights >= 0)
        g = s.gradients.sum(axis=(0, 1))
        assert np.all(np.abs(g) <= 1e-13 / GRID.dx)


def test_velocity_stencil_gradient_fd():
    rng = np.random.default_rng(3)
    lo, hi = GRID.interp_bounds()
    h = 1e-5 * GRID.dx
    for _ in range(50):
        x = rng.uniform(lo + 2 * h, hi - 2 * h)
        s = velocity_stencil(x, GRID)
        for axis in range(2):
            dp = np.array(x)
            dm = np.array(x)
            dp[axis] += h
            dm[axis] -= h
            fd = (velocity_stencil(dp, GRID).weights
                  - velocity_stencil(dm, GRID).weights) / (2 * h)
            np.testing.assert_allclose(s.gradients[:, :, axis], fd, atol=1e-6)


def test_velocity_stencil_out_of_range():
    with pytest.raises(DomainError, match="axis 0"):
        velocity_stencil((-0.99, 2.5), GRID)
    with pytest.raises(DomainError, match="axis 1"):
        velocity_stencil((0.0, 2.0 + 0.25 * 11.9), GRID)


def test_pressure_stencil_interpolatory():
    x = (GRID.origin[0] + 3 * GRID.dx, GRID.origin[1] + 7 * GRID.dx)
    s = pressure_stencil(x, GRID)
    w = np.zeros((2, 2))
    w[0, 0] = 1.0
    np.testing.assert_allclose(s.weights, w, atol=1e-15)
    assert s.base_index == (3, 7)


def test_pressure_stencil_center_and_pou():
    s = pressure_stencil(GRID.cell_center(2, 2), GRID)
    np.testing.assert_allclose(s.weights, 0.25 * np.ones((2, 2)), atol=1e-15)
    rng = np.random.default_rng(11)
    lo = np.array(GRID.origin)
    hi = lo + np.array(GRID.cells) * GRID.dx
    for _ in range(100):
        s = pressure_stencil(rng.uniform(lo, hi), GRID)
        assert abs(s.weights.sum() - 1.0) <= 1e-14


def test_linear_reproduction_greville():
    # coefficients sampled at cell centers reproduce affine fields exactly
    rng = np.random.default_rng(5)
    lo, hi = GRID.interp_bounds()
    for _ in range(20):
        A = rng.normal(size=2)
        b = rng.normal()
        f = lambda p: A @ p + b
        for _ in range(10):
            x = rng.uniform(lo + 1e-9, hi)
            s = velocity_stencil(x, GRID)
            acc = 0.0
            for a in range(3):
                for c in range(3):
                    ci = (s.base_index[0] + a, s.base_index[1] + c)
                    acc += s.weights[a, c] * f(GRID.cell_center(*ci))
            assert abs(acc - f(x)) <= 1e-12
