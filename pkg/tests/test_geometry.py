import numpy as np
import pytest

from bslqb.geometry import (
    CUT,
    EMPTY,
    FULL,
    Box,
    Circle,
    Complement,
    HalfPlane,
    LevelSet,
    Union,
    build_domain,
    classify_cells,
    clip_cell,
    polygon_quadrature,
    sample_levelset,
    segment_quadrature,
)
from bslqb.grid import GridDesc


def grid8():
    return GridDesc((8, 8), 0.125, (0.0, 0.0))


def test_classify_no_fluid():
    g = grid8()
    phi = LevelSet(g, np.ones(g.node_counts))
    cls = classify_cells(None, None, fluid_phi=phi)
    assert np.all(cls == EMPTY)


def test_classify_particle_rule():
    g = grid8()
    phi = LevelSet(g, np.ones(g.node_counts))
    pc = np.zeros(g.cells, dtype=bool)
    pc[3, 4] = True
    cls = classify_cells(None, pc, fluid_phi=phi)
    assert cls[3, 4] == FULL
    assert (cls != EMPTY).sum() == 1


def test_classify_all_fluid_and_solid_cut():
    g = grid8()
    fluid = LevelSet(g, -np.ones(g.node_counts))
    cls = classify_cells(None, None, fluid_phi=fluid)
    assert np.all(cls == FULL)
    # vertical wall through the middle: right half solid (flow where x <= xw)
    wall = sample_levelset(HalfPlane((1, 0), 0.5 + 0.3 * g.dx), g)
    cls = classify_cells(wall, None, fluid_phi=fluid)
    assert np.all(cls[:4, :] == FULL)
    assert np.all(cls[5:, :] == EMPTY)
    assert np.all(cls[4, :] == CUT)


def test_clip_half_cell():
    g = grid8()
    # phi = x - x_wall, vertical split through cell (4, 2) midline
    xw = 0.5 + 0.5 * g.dx
    ls = sample_levelset(HalfPlane((1, 0), xw), g)
    polys, segs = clip_cell(ls, (4, 2))
    assert len(polys) == 1
    area = 0.5 * abs(
        np.sum(
            polys[0][:, 0] * np.roll(polys[0][:, 1], -1)
            - np.roll(polys[0][:, 0], -1) * polys[0][:, 1]
        )
    )
    assert area == pytest.approx(0.5 * g.dx**2, abs=1e-16)
    assert len(segs) == 1
    assert segs[0].length == pytest.approx(g.dx, abs=1e-15)
    np.testing.assert_allclose(segs[0].normal, [1.0, 0.0], atol=1e-14)


def halfplane_cell_area(ls, g, cell):
    polys, _ = clip_cell(ls, cell)
    return sum(
        0.5
        * np.sum(p[:, 0] * np.roll(p[:, 1], -1) - np.roll(p[:, 0], -1) * p[:, 1])
        for p in polys
    )


def test_halfplane_areas_match_shapely():
    from shapely.geometry import Polygon

    g = grid8()
    rng = np.random.default_rng(9)
    for _ in range(40):
        n = rng.normal(size=2)
        n /= np.linalg.norm(n)
        c = rng.uniform(0.2, 0.8)
        ls = sample_levelset(HalfPlane(n, c), g)
        big = Polygon([(-10, -10), (10, -10), (10, 10), (-10, 10)])
        # fluid side: n.x <= c; clip the plane as a huge half-space polygon
        t = np.array([-n[1], n[0]])
        p0 = c * n
        half = Polygon(
            [tuple(p0 + 50 * t), tuple(p0 - 50 * t),
             tuple(p0 - 50 * t - 100 * n), tuple(p0 + 50 * t - 100 * n)]
        ).intersection(big)
        for ci in range(8):
            for cj in range(8):
                vals = ls.values[ci : ci + 2, cj : cj + 2]
                if np.all(vals <= 0) or np.all(vals > 0):
                    continue
                cell = Polygon(
                    [
                        (ci * g.dx, cj * g.dx),
                        ((ci + 1) * g.dx, cj * g.dx),
                        ((ci + 1) * g.dx, (cj + 1) * g.dx),
                        (ci * g.dx, (cj + 1) * g.dx),
                    ]
                )
                exact = cell.intersection(half).area
                got = halfplane_cell_area(ls, g, (ci, cj))
                assert got == pytest.approx(exact, abs=1e-14)


def test_circle_area_monte_carlo():
    # total clipped area of a disc vs 1e7-sample Monte Carlo over the disc's
    # bounding box (hitting the 3e-4 relative band needs the tight sampler)
    g = GridDesc((256, 256), 1.0 / 256, (0.0, 0.0))
    c, r = (0.53, 0.48), 0.31
    sdf = Circle(c, r)
    ls = sample_levelset(sdf, g)
    cls = classify_cells(ls)
    dom = build_domain(g, ls, cls)
    rng = np.random.default_rng(1234)
    lo = np.array(c) - r
    hi = np.array(c) + r
    pts = rng.uniform(lo, hi, size=(10_000_000, 2))
    box_area = (hi - lo).prod()
    mc = box_area * float(np.count_nonzero(sdf(pts) <= 0.0)) / len(pts)
    assert dom.fluid_area == pytest.approx(mc, rel=3e-4)


def test_saddle_disambiguation():
    g = GridDesc((4, 4), 1.0, (0.0, 0.0))
    vals = np.ones(g.node_counts)
    # alternating signs on cell (1,1): fluid at (1,1) and (2,2) corners
    vals[1, 1] = vals[2, 2] = -1.0
    vals[2, 1] = vals[1, 2] = 3.0  # center = mean = 1 > 0: disconnected
    ls = LevelSet(g, vals)
    polys, segs = clip_cell(ls, (1, 1))
    assert len(polys) == 2 and len(segs) == 2
    vals[2, 1] = vals[1, 2] = 0.5  # center = -0.25: connected hexagon
    ls = LevelSet(g, vals)
    polys, segs = clip_cell(ls, (1, 1))
    assert len(polys) == 1 and len(polys[0]) == 6 and len(segs) == 2
    rule = polygon_quadrature(polys[0], 2)
    assert np.all(rule.weights > 0)


def test_normals_point_out_of_fluid():
    g = GridDesc((16, 16), 1.0 / 16, (0.0, 0.0))
    ls = sample_levelset(Circle((0.5, 0.5), 0.3), g)
    cls = classify_cells(ls)
    dom = build_domain(g, ls, cls)
    assert dom.segments
    eps = 1e-4 * g.dx
    for s in dom.segments:
        mid = s.midpoint

        def bilin(p):
            zx = (p[0] - g.origin[0]) / g.dx
            zy = (p[1] - g.origin[1]) / g.dx
            i, j = int(np.floor(zx)), int(np.floor(zy))
            tx, ty = zx - i, zy - j
            v = ls.values
            return (
                v[i, j] * (1 - tx) * (1 - ty)
                + v[i + 1, j] * tx * (1 - ty)
                + v[i, j + 1] * (1 - tx) * ty
                + v[i + 1, j + 1] * tx * ty
            )

        assert np.linalg.norm(s.normal) == pytest.approx(1.0, abs=1e-13)
        assert bilin(mid + eps * s.normal) > bilin(mid)


def test_polygon_quadrature_exactness():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    r = polygon_quadrature(square, 1)
    assert r.weights.sum() == pytest.approx(1.0, abs=1e-15)
    r = polygon_quadrature(square, 5)
    val = np.sum(r.weights * r.points[:, 0] ** 2 * r.points[:, 1] ** 2)
    # degree-4 monomial under a degree-5 rule
    assert val == pytest.approx(1.0 / 9.0, abs=1e-14)
    tri = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)
    r = polygon_quadrature(tri, 3)
    assert np.sum(r.weights * r.points[:, 0]) == pytest.approx(1.0 / 6.0, abs=1e-15)


def green_monomial_integral(poly, i, j):
    """Analytic integral of x^i y^j over a polygon via Green's theorem:
    closed-form edge integrals of x^{i+1} y^j / (i+1) dy."""
    total = 0.0
    n = len(poly)
    from math import comb

    for k in range(n):
        x0, y0 = poly[k]
        x1, y1 = poly[(k + 1) % n]
        dx, dy = x1 - x0, y1 - y0
        if dy == 0.0:
            continue
        # param t in [0,1]: x = x0 + t dx, y = y0 + t dy
        acc = 0.0
        for a in range(i + 2):
            for b in range(j + 1):
                acc += (
                    comb(i + 1, a)
                    * comb(j, b)
                    * x0 ** (i + 1 - a)
                    * dx**a
                    * y0 ** (j - b)
                    * dy**b
                    / (a + b + 1)
                )
        total += acc * dy / (i + 1)
    return total


def test_quadrature_monomials_random_convex_polygons():
    rng = np.random.default_rng(21)
    for _ in range(10):
        ang = np.sort(rng.uniform(0, 2 * np.pi, size=6))
        rad = rng.uniform(0.3, 1.0, size=6)
        poly = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        poly += rng.uniform(-0.2, 0.2, size=2)
        deg = 5
        r = polygon_quadrature(poly, deg)
        for i in range(deg + 1):
            for j in range(deg + 1 - i):
                num = np.sum(r.weights * r.points[:, 0] ** i * r.points[:, 1] ** j)
                ref = green_monomial_integral(poly, i, j)
                assert num == pytest.approx(ref, abs=1e-13)


def test_segment_quadrature():
    r = segment_quadrature((0.0, 0.0), (2.0, 0.0), 1)
    assert r.weights.sum() == pytest.approx(2.0, abs=1e-15)
    r = segment_quadrature((0.0, 0.0), (1.0, 1.0), 3)
    assert np.sum(r.weights * r.points[:, 0]) == pytest.approx(
        np.sqrt(2) / 2, abs=1e-14
    )
    # 2-point Gauss integrates x^3 on a unit segment exactly
    r = segment_quadrature((0.0, 0.0), (1.0, 0.0), 3)
    assert len(r.weights) == 2
    assert np.sum(r.weights * r.points[:, 0] ** 3) == pytest.approx(0.25, abs=1e-16)
    assert segment_quadrature((1.0, 1.0), (1.0, 1.0), 3).weights.size == 0


def test_measure_consistency_smooth_boundary():
    g = GridDesc((64, 64), 1.0 / 64, (0.0, 0.0))
    sdf = Circle((0.5, 0.5), 0.37)
    ls = sample_levelset(sdf, g)
    dom = build_domain(g, ls, classify_cells(ls))
    assert dom.fluid_area == pytest.approx(np.pi * 0.37**2, rel=1e-3)


def test_union_intersection_complement_box():
    g = grid8()
    shape = Union(Circle((0.3, 0.3), 0.2), Box((0.5, 0.5), (0.9, 0.8)))
    ls = sample_levelset(Complement(shape), g)
    pts = np.array([[0.3, 0.3], [0.7, 0.6], [0.05, 0.95]])
    inside_shape = shape(pts) <= 0
    assert list(inside_shape) == [True, True, False]
    assert ls.values.shape == g.node_counts
