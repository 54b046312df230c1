"""Scene configuration: JSON parsing, validation, defaults.

A config is one flat JSON object (plus a free-form scene_params section
whose keys each scene validates); unknown keys are rejected so typos fail
loudly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


KNOWN_SCENES = (
    "standing_pool",
    "spinning_circle",
    "vortex_shedding",
    "narrow_band_drop",
    "dam_break",
    "burgers_convergence",
)

_KNOWN_KEYS = {
    "scene", "cells", "dx", "origin", "end_time", "max_steps",
    "dt_fixed", "cfl", "dt_min", "dt_max",
    "rho", "gravity",
    "lambda", "lambda_c", "newton_tol", "max_newton_iters",
    "recovery_tol", "recovery_max_iters", "scheme",
    "tau_m_rel", "band_width_cells", "particles_per_cell",
    "projection_tol", "projection_max_iters",
    "seed", "out_dir", "frame_interval", "debug_dump", "threads",
    "scene_params",
}


@dataclass
class SceneConfig:
    scene: str
    cells: tuple[int, int]
    dx: float
    origin: tuple[float, float] = (0.0, 0.0)
    end_time: float = 1.0
    max_steps: int | None = None
    dt_fixed: float | None = None
    cfl: float | None = None
    dt_min: float = 0.0
    dt_max: float = math.inf
    rho: float = 1.0
    gravity: tuple[float, float] = (0.0, -9.8)
    lam: float | None = None  # JSON key "lambda"
    lambda_c: float | None = None  # lambda = 1 - c dx
    newton_tol: float | None = None
    max_newton_iters: int = 10
    recovery_tol: float = 1e-12
    recovery_max_iters: int = 500
    scheme: str = "bslqb"
    tau_m_rel: float = 0.1
    band_width_cells: float = 7.0
    particles_per_cell: int = 8
    projection_tol: float = 1e-10
    projection_max_iters: int | None = None
    seed: int = 0
    out_dir: str = "out"
    frame_interval: int = 0
    debug_dump: bool = False
    threads: int = 1
    scene_params: dict = field(default_factory=dict)

    @property
    def resolved_lambda(self) -> float:
        if self.lambda_c is not None:
            return 1.0 - self.lambda_c * self.dx
        if self.lam is not None:
            return self.lam
        return 1.0

    def validate(self):
        if self.scene not in KNOWN_SCENES:
            raise ConfigError(
                f"unknown scene {self.scene!r}; available: {', '.join(KNOWN_SCENES)}"
            )
        if len(self.cells) != 2 or any(int(c) < 4 for c in self.cells):
            raise ConfigError("cells must be two integers >= 4")
        if not self.dx > 0:
            raise ConfigError("dx must be positive")
        if not self.end_time > 0:
            raise ConfigError("end_time must be positive")
        if self.dt_fixed is not None and self.cfl is not None:
            raise ConfigError("cfl and dt_fixed are mutually exclusive")
        if self.dt_fixed is not None and not self.dt_fixed > 0:
            raise ConfigError("dt_fixed must be positive")
        if self.cfl is not None and not self.cfl > 0:
            raise ConfigError("cfl must be positive")
        if self.dt_min > self.dt_max:
            raise ConfigError("dt_min must not exceed dt_max")
        if self.lam is not None and self.lambda_c is not None:
            raise ConfigError("lambda and lambda_c are mutually exclusive")
        if self.lam is not None and not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lambda must be in [0,1]")
        lam = self.resolved_lambda
        if not 0.0 <= lam <= 1.0:
            raise ConfigError(
                f"lambda_c={self.lambda_c} gives lambda={lam} outside [0,1]"
            )
        if self.scheme not in ("bslqb", "sl"):
            raise ConfigError("scheme must be 'bslqb' or 'sl'")
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if self.tau_m_rel <= 0:
            raise ConfigError("tau_m_rel must be positive")
        if self.particles_per_cell < 0:
            raise ConfigError("particles_per_cell must be >= 0")
        if self.band_width_cells < 0:
            raise ConfigError("band_width_cells must be >= 0")
        if self.projection_tol <= 0 or self.recovery_tol <= 0:
            raise ConfigError("solver tolerances must be positive")
        if self.frame_interval < 0:
            raise ConfigError("frame_interval must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not isinstance(self.scene_params, dict):
            raise ConfigError("scene_params must be an object")
        return self


_RENAMES = {"lambda": "lam"}


def config_from_dict(data: dict) -> SceneConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "scene" not in data:
        raise ConfigError("missing required key: scene")
    if "cells" not in data or "dx" not in data:
        raise ConfigError("missing required keys: cells, dx")
    kwargs = {}
    for k, v in data.items():
        k = _RENAMES.get(k, k)
        if k in ("cells", "origin", "gravity"):
            v = tuple(v)
        kwargs[k] = v
    cfg = SceneConfig(**kwargs)
    return cfg.validate()


def load_config(path) -> SceneConfig:
    """Parse and validate a JSON scene config file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: parse error at line {e.lineno}: {e.msg}") from e
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from e
    return config_from_dict(data)
