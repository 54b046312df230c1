"""Irregular domains: level sets, cut-cell clipping, quadrature.

The level set passed to classification/clipping is negative on the flow
side; its zero isocontour (approximated edge-linearly, marching-squares
style) becomes the velocity boundary. Free surfaces are cell-granular and
never clip: the fluid domain is the union of full fluid cells and
solid-clipped fluid cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .grid import GridDesc

EMPTY, FULL, CUT = 0, 1, 2


@dataclass
class LevelSet:
    grid: GridDesc
    values: np.ndarray  # nodal, (nx+1, ny+1), negative inside

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.node_counts:
            raise ValueError("level set extent does not match grid nodes")

    def copy(self) -> "LevelSet":
        return LevelSet(self.grid, self.values.copy())


# ---------------------------------------------------------------------------
# analytic signed-distance primitives (negative inside the shape)

class HalfPlane:
    def __init__(self, normal, offset):
        n = np.asarray(normal, dtype=float)
        self.normal = n / np.linalg.norm(n)
        self.offset = float(offset)

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        return pts @ self.normal - self.offset


class Circle:
    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        return np.hypot(*(pts - self.center).T) - self.radius


class Box:
    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        c = 0.5 * (self.lo + self.hi)
        h = 0.5 * (self.hi - self.lo)
        q = np.abs(pts - c) - h
        outside = np.hypot(np.maximum(q[:, 0], 0.0), np.maximum(q[:, 1], 0.0))
        inside = np.minimum(np.maximum(q[:, 0], q[:, 1]), 0.0)
        return outside + inside


class SineFloor:
    """Region below y = base + amplitude*sin(2*pi*frequency*x + phase)."""

    def __init__(self, base, amplitude, frequency, phase=0.0):
        self.base = base
        self.amplitude = amplitude
        self.frequency = frequency
        self.phase = phase

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        prof = self.base + self.amplitude * np.sin(
            2.0 * np.pi * self.frequency * pts[:, 0] + self.phase
        )
        return pts[:, 1] - prof


class Complement:
    def __init__(self, shape):
        self.shape = shape

    def __call__(self, pts):
        return -self.shape(pts)


class Union:
    def __init__(self, *shapes):
        self.shapes = shapes

    def __call__(self, pts):
        return np.min([s(pts) for s in self.shapes], axis=0)


class Intersection:
    def __init__(self, *shapes):
        self.shapes = shapes

    def __call__(self, pts):
        return np.max([s(pts) for s in self.shapes], axis=0)


def sample_levelset(sdf, grid: GridDesc) -> LevelSet:
    mx, my = grid.node_counts
    vals = sdf(grid.node_points()).reshape(mx, my)
    return LevelSet(grid, vals)


# ---------------------------------------------------------------------------
# quadrature

@dataclass
class QuadratureRule:
    points: np.ndarray  # (k, 2)
    weights: np.ndarray  # (k,)

    @staticmethod
    def empty() -> "QuadratureRule":
        return QuadratureRule(np.zeros((0, 2)), np.zeros(0))


def _gauss01(n):
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _duffy_rule(degree):
    """Unit-triangle rule exact for total degree `degree`, positive weights."""
    n = int(np.ceil((degree + 2) / 2))
    a, wa = _gauss01(n)
    b, wb = _gauss01(n)
    A, B = np.meshgrid(a, b, indexing="ij")
    WA, WB = np.meshgrid(wa, wb, indexing="ij")
    x = A.ravel()
    y = (B * (1.0 - A)).ravel()
    w = (WA * WB * (1.0 - A)).ravel()
    return np.stack([x, y], axis=1), w


def triangle_quadrature(v0, v1, v2, exact_degree):
    ref_pts, ref_w = _duffy_rule(exact_degree)
    e1 = np.asarray(v1) - v0
    e2 = np.asarray(v2) - v0
    det = e1[0] * e2[1] - e1[1] * e2[0]
    pts = v0 + ref_pts[:, :1] * e1 + ref_pts[:, 1:] * e2
    return QuadratureRule(pts, ref_w * abs(det))


def _polygon_area(poly):
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _ear_clip(poly):
    """Triangulate a simple polygon (CCW). O(n^2), n is tiny here."""
    idx = list(range(len(poly)))
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 1000:
        guard += 1
        n = len(idx)
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = poly[i0], poly[i1], poly[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= 0:
                continue
            ok = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = poly[j]
                # inside-triangle test via sign of the three edge crosses
                d0 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
                d1 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
                d2 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
                if d0 > 0 and d1 > 0 and d2 > 0:
                    ok = False
                    break
            if ok:
                tris.append((i0, i1, i2))
                idx.pop(k)
                break
        else:
            break
    if len(idx) == 3:
        tris.append(tuple(idx))
    return tris


def polygon_quadrature(poly, exact_degree, min_area=1e-14) -> QuadratureRule:
    """Rule over a simple polygon, exact for bivariate total degree
    <= exact_degree. Fan-triangulates from the centroid; falls back to ear
    clipping when the fan degenerates (non-convex pieces).
    """
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return QuadratureRule.empty()
    area = _polygon_area(poly)
    if area < 0:
        poly = poly[::-1]
        area = -area
    if area < min_area:
        return QuadratureRule.empty()
    x = poly[:, 0]
    y = poly[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    centroid = np.array([cx, cy])

    tris = []
    fan_ok = True
    for k in range(len(poly)):
        v1 = poly[k]
        v2 = poly[(k + 1) % len(poly)]
        s = (v1[0] - centroid[0]) * (v2[1] - centroid[1]) - (
            v1[1] - centroid[1]
        ) * (v2[0] - centroid[0])
        if s <= 0:
            fan_ok = False
            break
        tris.append((centroid, v1, v2))
    if not fan_ok:
        tris = [(poly[i], poly[j], poly[k]) for i, j, k in _ear_clip(poly)]

    pts = []
    wts = []
    for v0, v1, v2 in tris:
        r = triangle_quadrature(v0, v1, v2, exact_degree)
        if r.weights.size:
            pts.append(r.points)
            wts.append(r.weights)
    if not pts:
        return QuadratureRule.empty()
    return QuadratureRule(np.concatenate(pts), np.concatenate(wts))


def segment_quadrature(p0, p1, exact_degree, min_length=0.0) -> QuadratureRule:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.hypot(*(p1 - p0)))
    if length <= min_length:
        return QuadratureRule.empty()
    n = int(np.ceil((exact_degree + 1) / 2))
    t, w = leggauss(n)
    mid = 0.5 * (p0 + p1)
    half = 0.5 * (p1 - p0)
    pts = mid + np.outer(t, half)
    return QuadratureRule(pts, w * (length / 2.0))


# ---------------------------------------------------------------------------
# cut cells

@dataclass
class BoundarySegment:
    p0: np.ndarray
    p1: np.ndarray
    normal: np.ndarray  # unit, out of the fluid
    cell: tuple[int, int]

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.p1 - self.p0)))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p0 + self.p1)


@dataclass
class CutCellDomain:
    grid: GridDesc
    classification: np.ndarray  # (nx, ny) int8: EMPTY / FULL / CUT
    areas: np.ndarray  # fluid area per cell
    polygons: dict = field(default_factory=dict)  # (i,j) -> list of (k,2) arrays
    segments: list = field(default_factory=list)  # BoundarySegment

    @property
    def fluid_area(self) -> float:
        return float(self.areas.sum())

    def fluid_cells(self):
        return np.argwhere(self.classification != EMPTY)


def classify_cells(solid: LevelSet | None, particle_cells=None,
                   fluid_phi: LevelSet | None = None) -> np.ndarray:
    """Per-cell classification.

    A cell holds fluid when a particle sits in it or one of its nodes has
    non-positive fluid level set value (both absent means everywhere, the
    smoke convention), and the solid level set leaves it at least partly
    open. Solid-cut fluid cells are marked CUT.
    """
    grid = (solid or fluid_phi).grid if (solid or fluid_phi) is not None else None
    if grid is None:
        raise ValueError("need a level set or an explicit grid to classify")
    nx, ny = grid.cells

    if particle_cells is None and fluid_phi is None:
        present = np.ones((nx, ny), dtype=bool)
    else:
        present = np.zeros((nx, ny), dtype=bool)
        if fluid_phi is not None:
            f = fluid_phi.values <= 0.0
            present |= f[:-1, :-1] | f[1:, :-1] | f[:-1, 1:] | f[1:, 1:]
        if particle_cells is not None:
            present |= particle_cells

    cls = np.where(present, FULL, EMPTY).astype(np.int8)
    if solid is not None:
        s = solid.values <= 0.0  # flow side
        nopen = (
            s[:-1, :-1].astype(np.int8)
            + s[1:, :-1]
            + s[:-1, 1:]
            + s[1:, 1:]
        )
        cls[nopen == 0] = EMPTY
        cls[(cls != EMPTY) & (nopen < 4)] = CUT
    return cls


def _cell_corners(grid: GridDesc, ci, cj):
    x0 = grid.origin[0] + ci * grid.dx
    y0 = grid.origin[1] + cj * grid.dx
    d = grid.dx
    return [
        np.array([x0, y0]),
        np.array([x0 + d, y0]),
        np.array([x0 + d, y0 + d]),
        np.array([x0, y0 + d]),
    ]


def _crossing(pa, va, pb, vb):
    # canonical operand order: neighbor cells sharing this edge then produce
    # bitwise-identical crossings, so polyline vertices can be keyed exactly
    if (pb[0], pb[1]) < (pa[0], pa[1]):
        pa, va, pb, vb = pb, vb, pa, va
    t = va / (va - vb)
    return pa + t * (pb - pa)


def _walk_polygon(corners, vals):
    """Sutherland-style walk: fluid corners plus edge crossings, CCW,
    each vertex tagged True when it is a crossing."""
    out = []
    tags = []
    for k in range(4):
        pa, va = corners[k], vals[k]
        pb, vb = corners[(k + 1) % 4], vals[(k + 1) % 4]
        if va <= 0.0:
            out.append(pa)
            tags.append(False)
        if (va <= 0.0) != (vb <= 0.0):
            out.append(_crossing(pa, va, pb, vb))
            tags.append(True)
    return out, tags


def _chords(out, tags):
    segs = []
    n = len(out)
    for k in range(n):
        if tags[k] and tags[(k + 1) % n]:
            segs.append((out[k], out[(k + 1) % n]))
    return segs


def _corner_triangle(corners, vals, k):
    """Fluid triangle at corner k for the disconnected saddle."""
    prev = (k + 3) % 4
    nxt = (k + 1) % 4
    e_in = _crossing(corners[prev], vals[prev], corners[k], vals[k])
    e_out = _crossing(corners[k], vals[k], corners[nxt], vals[nxt])
    poly = [e_in, corners[k], e_out]
    return poly, [(e_out, e_in)]


def clip_cell(solid: LevelSet, cell: tuple[int, int]):
    """Fluid polygon(s) and Dirichlet boundary segments of one cell.

    Zero crossings are linear along edges; the alternating-sign saddle is
    disambiguated by the bilinear center value. Segment normals are unit
    and point out of the fluid (toward positive level set).
    """
    ci, cj = cell
    grid = solid.grid
    corners = _cell_corners(grid, ci, cj)
    vals = [
        float(solid.values[ci, cj]),
        float(solid.values[ci + 1, cj]),
        float(solid.values[ci + 1, cj + 1]),
        float(solid.values[ci, cj + 1]),
    ]
    fluid = [v <= 0.0 for v in vals]
    nf = sum(fluid)
    if nf == 0:
        return [], []
    if nf == 4:
        return [np.array(corners)], []

    saddle = nf == 2 and fluid[0] == fluid[2]
    polys = []
    chords = []
    if saddle and sum(vals) > 0.0:  # center not fluid: two triangles
        for k in range(4):
            if fluid[k]:
                poly, ch = _corner_triangle(corners, vals, k)
                polys.append(np.array(poly))
                chords.extend(ch)
    else:
        out, tags = _walk_polygon(corners, vals)
        polys.append(np.array(out))
        chords.extend(_chords(out, tags))

    segments = []
    for p0, p1 in chords:
        d = p1 - p0
        length = float(np.hypot(*d))
        if length < 1e-14 * grid.dx:
            continue
        normal = np.array([d[1], -d[0]]) / length
        segments.append(BoundarySegment(p0, p1, normal, (ci, cj)))
    return polys, segments


def build_domain(grid: GridDesc, solid: LevelSet | None,
                 classification: np.ndarray) -> CutCellDomain:
    """Clips every CUT cell and tabulates fluid areas.

    Cells whose clipped area degenerates are demoted to EMPTY.
    """
    cls = classification.copy()
    nx, ny = grid.cells
    areas = np.zeros((nx, ny))
    cell_area = grid.dx * grid.dx
    areas[cls == FULL] = cell_area
    polygons = {}
    segments = []
    if solid is not None:
        for ci, cj in np.argwhere(cls == CUT):
            polys, segs = clip_cell(solid, (int(ci), int(cj)))
            a = sum(max(_polygon_area(p), 0.0) for p in polys)
            if a <= 1e-14 * cell_area:
                cls[ci, cj] = EMPTY
                continue
            if not segs and a >= cell_area * (1.0 - 1e-12):
                cls[ci, cj] = FULL
                areas[ci, cj] = cell_area
                continue
            areas[ci, cj] = a
            polygons[(int(ci), int(cj))] = polys
            segments.extend(segs)
    return CutCellDomain(grid, cls, areas, polygons, segments)
