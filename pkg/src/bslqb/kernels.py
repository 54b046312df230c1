"""Hot-kernel backend selection.

Prefers the compiled Cython extension when importable, else the vectorized
numpy fallback. BSLQB_BACKEND=python or BSLQB_BACKEND=compiled forces the
choice (the latter raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _pykernels

_forced = os.environ.get("BSLQB_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _pykernels
elif _forced == "compiled":
    from . import _ckernels as _impl  # noqa: F401  (ImportError is the contract)
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND_NAME

eval_velocity = _impl.eval_velocity
eval_velocity_grad = _impl.eval_velocity_grad
explicit_nodes = _impl.explicit_nodes
bslqb_nodes = _impl.bslqb_nodes
p2g = _impl.p2g
sample_linear = _impl.sample_linear
redistance_sweeps = _impl.redistance_sweeps
particles_to_levelset = _impl.particles_to_levelset
cell_centers = _pykernels.cell_centers  # cheap setup helper, always numpy


def available_backends():
    """Names of importable backends, compiled first if present."""
    names = []
    try:
        from . import _ckernels  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    names.append("python")
    return names


def get_backend(name: str):
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
