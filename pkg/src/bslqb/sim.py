"""Time stepping: Chorin splitting over the cut-cell collocated grid.

Per step: (1) pick dt, (2) advect particles, (3) BSLQB/explicit node
solves + hybrid particle blend + coefficient recovery into the
intermediate field W, (4) free-surface scenes rebuild the fluid level set
and re-clip the domain, (5) assemble and solve the pressure projection,
(6) grid-to-particle transfer and band reseeding, (7) diagnostics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .advect import AdvectionParams, advect_field, advect_levelset
from .config import KNOWN_SCENES, SceneConfig
from .geometry import (
    Box,
    Circle,
    Complement,
    CutCellDomain,
    EMPTY,
    Intersection,
    LevelSet,
    SineFloor,
    build_domain,
    classify_cells,
    sample_levelset,
)
from .grid import GridDesc, VelocityField
from .narrowband import (
    NarrowBandState,
    DEFAULT_PARTICLE_RADIUS_FACTOR,
    particles_to_levelset,
    redistance,
    reseed_band,
    union_levelsets,
)
from .particles import HybridParams, ParticleSet, advect_particles, g2p, p2g_blend, seed_particles
from . import kernels, projection

WALL_INSET_CELLS = 1.63  # keeps solid walls off the grid lines


class SceneError(ValueError):
    pass


@dataclass
class Scene:
    """Static scene data: geometry, boundary data, feature flags."""

    name: str
    grid: GridDesc
    use_projection: bool = True
    use_particles: bool = False
    free_surface: bool = False
    solid: LevelSet | None = None
    bc_speed: object = 0.0  # scalar or callable(points, normal)
    boundary_velocity: object = None  # callable(points, t) for advection
    oracle: object = None  # exact solution field, convergence scenes
    drop_outside: object = None  # callable(points)->keep mask, per step
    dye0: np.ndarray | None = None
    # velocity held inside solid regions (inlet slabs carry the inflow,
    # walls and obstacles rest); characteristics that dip into the solid
    # then interpolate boundary-condition data instead of advected residue
    solid_velocity: object = None  # callable(points)->(N,2)


@dataclass
class StepDiagnostics:
    step: int
    time: float
    dt: float
    kinetic_energy: float
    max_speed: float
    divergence_residual: float
    mean_newton_iters: float
    newton_fallback_frac: float
    cg_iters: int
    particle_count: int

    def row(self):
        return [
            self.step, self.time, self.dt, self.kinetic_energy, self.max_speed,
            self.divergence_residual, self.mean_newton_iters,
            self.newton_fallback_frac, self.cg_iters, self.particle_count,
        ]


@dataclass
class SimState:
    scene: Scene
    cfg: SceneConfig
    u: VelocityField
    time: float = 0.0
    step_index: int = 0
    particles: ParticleSet = field(default_factory=ParticleSet.empty)
    fluid_phi: LevelSet | None = None
    domain: CutCellDomain | None = None
    dye: np.ndarray | None = None
    system: projection.ProjectionSystem | None = None
    last_solution: projection.ProjectionSolution | None = None
    rng: np.random.Generator = None
    _domain_key: bytes = b""
    _solid_centers: np.ndarray | None = None
    _solid_values: np.ndarray | None = None

    @property
    def grid(self) -> GridDesc:
        return self.scene.grid


def _advection_params(cfg: SceneConfig) -> AdvectionParams:
    return AdvectionParams(
        lam=cfg.resolved_lambda,
        newton_tol=cfg.newton_tol,
        max_newton_iters=cfg.max_newton_iters,
        cg_tol=cfg.recovery_tol,
        max_cg_iters=cfg.recovery_max_iters,
        scheme=cfg.scheme,
    )


def _hybrid_params(cfg: SceneConfig) -> HybridParams:
    mass = cfg.rho * cfg.dx * cfg.dx / max(cfg.particles_per_cell, 1)
    return HybridParams(
        tau_m=cfg.tau_m_rel * mass,
        band_width=cfg.band_width_cells * cfg.dx,
    )


def active_max_speed(state: SimState) -> float:
    """Largest coefficient magnitude over fluid-supported dofs (all dofs
    for projection-free scenes)."""
    if state.system is not None:
        active = state.system.u_ids >= 0
        if active.any():
            return float(np.max(np.abs(state.u.coeffs[active])))
    return state.u.max_speed()


def cfl_dt(state: SimState, cfg: SceneConfig) -> float:
    """dt = CFL dx / max speed, clamped to [dt_min, dt_max]."""
    if cfg.dt_fixed is not None:
        return cfg.dt_fixed
    number = cfg.cfl if cfg.cfl is not None else 4.0
    vmax = max(active_max_speed(state), 1e-8)
    dt = number * cfg.dx / vmax
    return float(np.clip(dt, cfg.dt_min, cfg.dt_max))


def _dilate3(mask: np.ndarray) -> np.ndarray:
    """3x3 binary dilation: cells whose velocity stencils touch the set."""
    out = np.zeros_like(mask)
    nx, ny = mask.shape
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            sa = slice(max(a, 0), nx + min(a, 0))
            sb = slice(max(b, 0), ny + min(b, 0))
            ta = slice(max(-a, 0), nx + min(-a, 0))
            tb = slice(max(-b, 0), ny + min(-b, 0))
            out[ta, tb] |= mask[sa, sb]
    return out


def _classify_and_clip(state: SimState) -> CutCellDomain:
    scene = state.scene
    pc = state.particles.cell_mask(scene.grid) if len(state.particles) else None
    cls = classify_cells(scene.solid, pc, fluid_phi=state.fluid_phi)
    return build_domain(scene.grid, scene.solid, cls)


def _ensure_system(state: SimState, cfg: SceneConfig, dt: float):
    """Assemble the projection system, reusing it while the fluid-cell
    classification is unchanged (dt only rescales the cached operators)."""
    key = hashlib.sha256(state.domain.classification.tobytes()).digest()
    if state.system is None or key != state._domain_key:
        state.system = projection.assemble(
            state.domain,
            state.grid,
            cfg.rho,
            cfg.gravity,
            state.scene.bc_speed,
            dt,
        )
        state._domain_key = key
    elif state.system.dt != dt:
        state.system = state.system.with_dt(dt)
    return state.system


def _pin_solid_coefficients(state: SimState):
    """Reset inactive coefficients whose centers sit inside the solid to the
    scene's boundary velocity (the active set stays untouched: partially
    covered dofs belong to the projected solution)."""
    scene = state.scene
    if scene.solid is None or scene.solid_velocity is None:
        return
    if state._solid_centers is None:
        pts = state.grid.cell_center_points()
        phi = kernels.sample_linear(
            scene.solid.values,
            state.grid.origin[0], state.grid.origin[1], state.grid.dx, pts,
        )
        nx, ny = state.grid.cells
        state._solid_centers = (phi > 0.0).reshape(nx, ny)
        state._solid_values = np.asarray(scene.solid_velocity(pts), dtype=float
                                         ).reshape(nx, ny, 2)
    mask = state._solid_centers
    if state.system is not None:
        mask = mask & (state.system.u_ids < 0)
    state.u.coeffs[mask] = state._solid_values[mask]


def _kinetic_energy(state: SimState) -> float:
    u = state.u.coeffs
    if state.system is not None:
        active = state.system.u_ids >= 0
        mass = state.system.mass
        vals = u[active].ravel()
        return float(0.5 * np.sum(mass * vals * vals))
    rho_a = state.cfg.rho * state.grid.dx ** 2
    return float(0.5 * rho_a * np.sum(u * u))


def step(state: SimState, cfg: SceneConfig) -> SimState:
    """One full pipeline step, in place; returns state for chaining."""
    scene = state.scene
    grid = state.grid
    stage = "dt"
    try:
        dt = cfl_dt(state, cfg)
        remaining = cfg.end_time - state.time
        if remaining < dt and remaining > 0:
            dt = remaining

        stage = "advect_particles"
        if scene.use_particles and len(state.particles):
            state.particles = advect_particles(state.particles, dt, grid)
            if scene.drop_outside is not None:
                state.particles = state.particles.select(
                    scene.drop_outside(state.particles.x)
                )

        stage = "advect_velocity"
        params = _advection_params(cfg)
        stat_mask = None
        if state.domain is not None:
            stat_mask = _dilate3(state.domain.classification != EMPTY)
        w_field, stats = advect_field(
            state.u, dt, params, boundary=scene.boundary_velocity, t=state.time,
            stat_mask=stat_mask,
        )
        if scene.use_particles and len(state.particles):
            w_field, _ = p2g_blend(state.particles, w_field, _hybrid_params(cfg))

        stage = "free_surface"
        if scene.free_surface and state.fluid_phi is not None:
            nodes = grid.node_points()
            w_nodes = w_field.eval(nodes, clamp=True).reshape(
                grid.node_counts + (2,)
            )
            phi_adv = LevelSet(
                grid,
                advect_levelset(state.fluid_phi.values, w_nodes, dt, grid),
            )
            if scene.use_particles and len(state.particles):
                phi_p = particles_to_levelset(
                    state.particles, grid, DEFAULT_PARTICLE_RADIUS_FACTOR * grid.dx
                )
                phi_adv = union_levelsets(phi_adv, phi_p)
            solid_nodes = (
                scene.solid.values > 0 if scene.solid is not None else None
            )
            state.fluid_phi = redistance(phi_adv, iterations=4, untouched=solid_nodes)
        if scene.use_projection and (scene.free_surface or state.domain is None):
            state.domain = _classify_and_clip(state)

        if state.dye is not None:
            nodes = grid.node_points()
            w_nodes = w_field.eval(nodes, clamp=True).reshape(grid.node_counts + (2,))
            state.dye = advect_levelset(state.dye, w_nodes, dt, grid)

        stage = "projection"
        cg_iters = 0
        div_res = 0.0
        if scene.use_projection:
            prev_key = state._domain_key
            system = _ensure_system(state, cfg, dt)
            warm = None
            if (
                state.last_solution is not None
                and state._domain_key == prev_key
                and state.last_solution.x_full is not None
            ):
                warm = state.last_solution.x_full
            sol = projection.solve(
                system,
                w_field,
                tol=cfg.projection_tol,
                max_iters=cfg.projection_max_iters,
                x0=warm,
            )
            state.last_solution = sol
            state.u = sol.U
            cg_iters = sol.iterations
            div_res = sol.div_residual
        else:
            state.u = w_field

        stage = "g2p"
        if scene.use_particles and len(state.particles):
            state.particles = g2p(state.particles, state.u)
        if scene.free_surface and scene.use_particles and state.fluid_phi is not None:
            band = NarrowBandState(
                state.fluid_phi, state.particles, cfg.band_width_cells * grid.dx
            )
            band = reseed_band(
                band, cfg.particles_per_cell, cfg.rho, state.rng, u_field=state.u
            )
            state.particles = band.particles

        stage = "pin_solid"
        _pin_solid_coefficients(state)

        stage = "diagnostics"
        state.time += dt
        state.step_index += 1
        if not np.all(np.isfinite(state.u.coeffs)):
            raise FloatingPointError("velocity field went non-finite")
        diag = StepDiagnostics(
            step=state.step_index,
            time=state.time,
            dt=dt,
            kinetic_energy=_kinetic_energy(state),
            max_speed=active_max_speed(state),
            divergence_residual=div_res,
            mean_newton_iters=stats.mean_newton_iters,
            newton_fallback_frac=stats.fallback_fraction,
            cg_iters=cg_iters,
            particle_count=len(state.particles),
        )
        state.last_diag = diag
        return state
    except Exception as e:
        msg = f"step {state.step_index} stage {stage!r}: {e}"
        try:
            wrapped = type(e)(msg)
        except Exception:
            wrapped = RuntimeError(msg)
        raise wrapped from e


# ---------------------------------------------------------------------------
# scenes

def _walled_flow(grid: GridDesc, extra=None, top_open=True):
    """Flow region: box inset from the grid edge, minus extra solids."""
    dx = grid.dx
    lo = np.array(grid.origin) + WALL_INSET_CELLS * dx
    hi = np.array(grid.origin) + np.array(grid.cells) * dx - WALL_INSET_CELLS * dx
    if top_open:
        hi[1] = grid.origin[1] + (grid.cells[1] + 10) * dx
    shapes = [Box(lo, hi)]
    if extra is not None:
        shapes.append(Complement(extra))
    return Intersection(*shapes) if len(shapes) > 1 else shapes[0]


def _greville_field(grid: GridDesc, fn) -> VelocityField:
    pts = grid.cell_center_points()
    vals = np.asarray(fn(pts), dtype=float)
    return VelocityField(grid, vals.reshape(grid.cells[0], grid.cells[1], 2))


def _burgers_matrix():
    r = 0.1
    R = np.array([[np.cos(r), -np.sin(r)], [np.sin(r), np.cos(r)]])
    return R @ np.diag([1.0, 0.25]) @ R.T


def exact_quadratic_burgers(pts, t, A):
    """Pointwise oracle for u0 = (s0, s0), s0(x) = x^T A x: scalar Newton on
    s = s0(x - t s)."""
    pts = np.atleast_2d(pts)
    s = np.einsum("ni,ij,nj->n", pts, A, pts)
    for _ in range(100):
        y = pts - t * s[:, None]
        f = s - np.einsum("ni,ij,nj->n", y, A, y)
        grad = 2.0 * y @ A
        fp = 1.0 + t * (grad[:, 0] + grad[:, 1])
        step_ = f / fp
        s = s - step_
        if np.max(np.abs(step_)) < 1e-15:
            break
    return np.stack([s, s], axis=1)


def exact_linear_burgers(pts, t, A):
    pts = np.atleast_2d(pts)
    return np.linalg.solve(np.eye(2) + t * A, (pts @ A.T).T).T


def _scene_param(cfg, name, default):
    return cfg.scene_params.get(name, default)


_SCENE_PARAM_KEYS = {
    "standing_pool": {"fill_cells", "floor_base", "floor_amp", "floor_freq", "floor_phase"},
    "spinning_circle": {"omega", "radius", "center"},
    "vortex_shedding": {"inlet_speed", "circle_center", "circle_radius",
                        "inlet_cells", "outlet_cells", "particle_band"},
    "narrow_band_drop": {"pool_level", "drop_center", "drop_radius"},
    "dam_break": {"column_width_frac", "column_height_frac"},
    "burgers_convergence": {"field", "dx_list"},
}


def build_scene(cfg: SceneConfig) -> SimState:
    """Deterministic initial state for a named scene."""
    if cfg.scene not in KNOWN_SCENES:
        raise SceneError(
            f"unknown scene {cfg.scene!r}; available: {', '.join(KNOWN_SCENES)}"
        )
    allowed = _SCENE_PARAM_KEYS[cfg.scene]
    unknown = set(cfg.scene_params) - allowed
    if unknown:
        raise SceneError(
            f"unknown scene_params for {cfg.scene}: {', '.join(sorted(unknown))}"
        )
    grid = GridDesc(tuple(int(c) for c in cfg.cells), cfg.dx, tuple(cfg.origin))
    rng = np.random.default_rng(cfg.seed)
    dx = grid.dx
    builder = {
        "standing_pool": _build_standing_pool,
        "spinning_circle": _build_spinning_circle,
        "vortex_shedding": _build_vortex_shedding,
        "narrow_band_drop": _build_narrow_band_drop,
        "dam_break": _build_dam_break,
        "burgers_convergence": _build_burgers,
    }[cfg.scene]
    state = builder(cfg, grid, rng)
    state.rng = rng
    if state.domain is None and state.scene.use_projection:
        state.domain = _classify_and_clip(state)
    return state


def _build_standing_pool(cfg, grid, rng):
    dx = grid.dx
    ny = grid.cells[1]
    fill_cells = int(_scene_param(cfg, "fill_cells", 3 * ny // 4))
    fill = grid.origin[1] + fill_cells * dx
    floor = SineFloor(
        _scene_param(cfg, "floor_base", 0.17),
        _scene_param(cfg, "floor_amp", 0.05),
        _scene_param(cfg, "floor_freq", 1.5),
        _scene_param(cfg, "floor_phase", 0.7),
    )
    flow = _walled_flow(grid, extra=floor, top_open=True)
    solid = sample_levelset(flow, grid)
    nodes = grid.node_points()
    fluid = LevelSet(grid, (nodes[:, 1] - fill + 0.5 * dx).reshape(grid.node_counts))
    scene = Scene(
        name="standing_pool",
        grid=grid,
        free_surface=True,
        solid=solid,
        bc_speed=0.0,
        solid_velocity=lambda pts: np.zeros((len(pts), 2)),
    )
    st = SimState(scene=scene, cfg=cfg, u=VelocityField(grid), fluid_phi=fluid)
    st.hydrostatic_surface = fill
    return st


def _build_spinning_circle(cfg, grid, rng):
    dx = grid.dx
    omega = _scene_param(cfg, "omega", 4.0)
    radius = _scene_param(cfg, "radius", 0.2)
    center = np.asarray(_scene_param(cfg, "center", (0.5, 0.5)), dtype=float)
    flow = _walled_flow(grid, top_open=False)
    solid = sample_levelset(flow, grid)

    def initial(pts):
        r = pts - center
        inside = np.hypot(r[:, 0], r[:, 1]) <= radius
        return np.where(
            inside[:, None], omega * np.stack([-r[:, 1], r[:, 0]], axis=1), 0.0
        )

    nodes = grid.node_points()
    dye = np.where(
        np.hypot(nodes[:, 0] - center[0] - 0.5 * radius, nodes[:, 1] - center[1])
        <= 0.5 * radius,
        1.0,
        0.0,
    ).reshape(grid.node_counts)
    scene = Scene(
        name="spinning_circle", grid=grid, solid=solid, bc_speed=0.0, dye0=dye,
        solid_velocity=lambda pts: np.zeros((len(pts), 2)),
    )
    return SimState(
        scene=scene, cfg=cfg, u=_greville_field(grid, initial), dye=dye.copy()
    )


def _build_vortex_shedding(cfg, grid, rng):
    dx = grid.dx
    nx, ny = grid.cells
    inlet_speed = _scene_param(cfg, "inlet_speed", 1.5)
    inlet_cells = _scene_param(cfg, "inlet_cells", 8.37)
    outlet_cells = _scene_param(cfg, "outlet_cells", 3.31)
    height = ny * dx
    length = nx * dx
    c_default = (
        grid.origin[0] + 0.25 * length,
        grid.origin[1] + 0.5 * height + 0.31 * dx,
    )
    center = np.asarray(_scene_param(cfg, "circle_center", c_default), dtype=float)
    radius = _scene_param(cfg, "circle_radius", 0.05 * height / 1.0)
    x_in = grid.origin[0] + inlet_cells * dx
    x_out = grid.origin[0] + length - outlet_cells * dx
    y_lo = grid.origin[1] + WALL_INSET_CELLS * dx
    y_hi = grid.origin[1] + height - WALL_INSET_CELLS * dx
    flow = Intersection(
        Box((x_in, y_lo), (grid.origin[0] + length + 10 * dx, y_hi)),
        Complement(Circle(center, radius)),
    )
    solid = sample_levelset(flow, grid)
    nodes = grid.node_points()
    # outlet column kept non-fluid: its faces act as a pressure outlet
    fluid = LevelSet(grid, (nodes[:, 0] - x_out).reshape(grid.node_counts))

    def bc_speed(pts, normal):
        a = np.where(pts[:, 0] < x_in + 0.5 * dx, inlet_speed * normal[0], 0.0)
        return a

    def keep_particles(pts):
        # particles leaving the flow region (walls, circle, outlet strip)
        # are spent: clamped stragglers would accumulate inside solids and
        # eventually override wall coefficients through the blend
        return (flow(pts) < 0.0) & (pts[:, 0] < x_out - dx)

    def solid_velocity(pts):
        behind_inlet = pts[:, 0] < x_in + 0.5 * dx
        return np.where(
            behind_inlet[:, None], np.array([inlet_speed, 0.0]), 0.0
        )

    scene = Scene(
        name="vortex_shedding",
        grid=grid,
        solid=solid,
        bc_speed=bc_speed,
        use_particles=cfg.particles_per_cell > 0
        and _scene_param(cfg, "particle_band", True),
        drop_outside=keep_particles,
        solid_velocity=solid_velocity,
    )

    def initial(pts):
        # potential flow around the cylinder: divergence-free with zero
        # normal velocity at the surface, so the start is shock-free
        # (a uniform start slams 3-4x inlet-speed spikes into the first
        # projection at the cylinder surface)
        rx = pts[:, 0] - center[0]
        ry = pts[:, 1] - center[1]
        r2 = rx * rx + ry * ry
        r2 = np.maximum(r2, 1e-30)
        f = radius * radius / (r2 * r2)
        ux = inlet_speed * (1.0 - f * (rx * rx - ry * ry))
        uy = inlet_speed * (-2.0 * f * rx * ry)
        inside = r2 <= radius * radius
        return np.where(inside[:, None], 0.0, np.stack([ux, uy], axis=1))

    st = SimState(
        scene=scene,
        cfg=cfg,
        u=_greville_field(grid, initial),
        fluid_phi=fluid,
    )
    if scene.use_particles:
        band_lo = grid.origin[1] + 0.5 * height
        band_hi = band_lo + 0.2 * height
        centers = grid.cell_center_points()
        mask = (
            (centers[:, 1] >= band_lo)
            & (centers[:, 1] <= band_hi)
            & (centers[:, 0] >= x_in + dx)
            & (centers[:, 0] <= x_out - 2 * dx)
        ).reshape(nx, ny)
        ps = seed_particles(grid, mask, cfg.particles_per_cell, cfg.rho, rng)
        ps.v[:, 0] = inlet_speed
        st.particles = g2p(ps, st.u)
    nodes_y = nodes[:, 1].reshape(grid.node_counts)
    st.dye = np.sin(np.pi * 8 * nodes_y / height) ** 2
    return st


def _build_narrow_band_drop(cfg, grid, rng):
    dx = grid.dx
    pool = _scene_param(cfg, "pool_level", 0.8)
    drop_c = np.asarray(_scene_param(cfg, "drop_center", (0.5, 1.35)), dtype=float)
    drop_r = _scene_param(cfg, "drop_radius", 0.2)
    flow = _walled_flow(grid, top_open=True)
    solid = sample_levelset(flow, grid)
    nodes = grid.node_points()
    phi = np.minimum(
        nodes[:, 1] - pool, np.hypot(*(nodes - drop_c).T) - drop_r
    ).reshape(grid.node_counts)
    fluid = LevelSet(grid, phi)
    scene = Scene(
        name="narrow_band_drop",
        grid=grid,
        free_surface=True,
        use_particles=cfg.particles_per_cell > 0,
        solid=solid,
        bc_speed=0.0,
        solid_velocity=lambda pts: np.zeros((len(pts), 2)),
    )
    st = SimState(scene=scene, cfg=cfg, u=VelocityField(grid), fluid_phi=fluid)
    band = NarrowBandState(fluid, ParticleSet.empty(), cfg.band_width_cells * dx)
    band = reseed_band(band, cfg.particles_per_cell, cfg.rho, rng, u_field=st.u)
    st.particles = band.particles
    return st


def _build_dam_break(cfg, grid, rng):
    dx = grid.dx
    nx, ny = grid.cells
    wfrac = _scene_param(cfg, "column_width_frac", 0.35)
    hfrac = _scene_param(cfg, "column_height_frac", 0.6)
    flow = _walled_flow(grid, top_open=True)
    solid = sample_levelset(flow, grid)
    lx = nx * dx
    ly = ny * dx
    x1 = grid.origin[0] + wfrac * lx
    y1 = grid.origin[1] + hfrac * ly
    nodes = grid.node_points()
    phi = np.maximum(nodes[:, 0] - x1, nodes[:, 1] - y1).reshape(grid.node_counts)
    fluid = LevelSet(grid, phi)
    scene = Scene(
        name="dam_break",
        grid=grid,
        free_surface=True,
        use_particles=cfg.particles_per_cell > 0,
        solid=solid,
        bc_speed=0.0,
        solid_velocity=lambda pts: np.zeros((len(pts), 2)),
    )
    st = SimState(scene=scene, cfg=cfg, u=VelocityField(grid), fluid_phi=fluid)
    band = NarrowBandState(fluid, ParticleSet.empty(), cfg.band_width_cells * dx)
    band = reseed_band(band, cfg.particles_per_cell, cfg.rho, rng, u_field=st.u)
    st.particles = band.particles
    return st


def _build_burgers(cfg, grid, rng):
    A = _burgers_matrix()
    kind = _scene_param(cfg, "field", "quadratic")
    if kind == "quadratic":
        def initial(pts):
            s = np.einsum("ni,ij,nj->n", pts, A, pts)
            return np.stack([s, s], axis=1)

        oracle = lambda pts, t: exact_quadratic_burgers(pts, t, A)
    elif kind == "linear":
        initial = lambda pts: pts @ A.T
        oracle = lambda pts, t: exact_linear_burgers(pts, t, A)
    else:
        raise SceneError(f"burgers field must be 'quadratic' or 'linear', got {kind!r}")
    scene = Scene(
        name="burgers_convergence",
        grid=grid,
        use_projection=False,
        boundary_velocity=oracle,
        oracle=oracle,
        bc_speed=0.0,
    )
    return SimState(scene=scene, cfg=cfg, u=_greville_field(grid, initial))


def run(cfg: SceneConfig, on_step=None) -> SimState:
    """Run a scene to end_time (or max_steps); on_step(state) after each
    step can record diagnostics or write frames."""
    state = build_scene(cfg)
    max_steps = cfg.max_steps if cfg.max_steps is not None else 10_000_000
    while state.time < cfg.end_time - 1e-12 and state.step_index < max_steps:
        step(state, cfg)
        if on_step is not None:
            on_step(state)
    return state
