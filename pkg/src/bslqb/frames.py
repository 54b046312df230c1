"""Binary frame files and CSV outputs.

FrameFile layout (little endian): magic b"BSLQB1" (6s), field name (16s,
NUL padded), extents (2 x uint32), dx (f64), time (f64), then row-major
float64 payload. Vector fields interleave components; the reader infers
the component count from the payload size.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"BSLQB1"
_HEADER = struct.Struct("<6s16sIIdd")


class FrameFormatError(ValueError):
    pass


def write_frame_array(array: np.ndarray, name: str, dx: float, time: float, path):
    """array: (nx, ny) scalar or (nx, ny, 2) vector, written bit-exactly."""
    arr = np.ascontiguousarray(array, dtype="<f8")
    if arr.ndim == 2:
        extents = arr.shape
    elif arr.ndim == 3 and arr.shape[2] == 2:
        extents = arr.shape[:2]
    else:
        raise FrameFormatError(f"unsupported field shape {arr.shape}")
    encoded = name.encode("utf-8")
    if len(encoded) > 16:
        raise FrameFormatError(f"field name {name!r} longer than 16 bytes")
    header = _HEADER.pack(MAGIC, encoded, extents[0], extents[1], dx, time)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(arr.tobytes())
    except OSError as e:
        raise OSError(f"{path}: {e.strerror}") from e


def read_frame(path):
    """Returns (name, extents, dx, time, array); array shape matches what
    was written."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise OSError(f"{path}: {e.strerror}") from e
    if len(raw) < _HEADER.size:
        raise FrameFormatError(f"{path}: truncated header")
    magic, name_b, ex, ey, dx, time = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FrameFormatError(f"{path}: bad magic {magic!r}")
    payload = raw[_HEADER.size :]
    n = ex * ey
    if len(payload) == 8 * n:
        arr = np.frombuffer(payload, dtype="<f8").reshape(ex, ey).copy()
    elif len(payload) == 16 * n:
        arr = np.frombuffer(payload, dtype="<f8").reshape(ex, ey, 2).copy()
    else:
        raise FrameFormatError(
            f"{path}: payload {len(payload)} bytes does not match extents ({ex}, {ey})"
        )
    return name_b.rstrip(b"\0").decode("utf-8"), (ex, ey), dx, time, arr


DIAGNOSTICS_COLUMNS = [
    "step", "time", "dt", "kinetic_energy", "max_speed",
    "divergence_residual", "mean_newton_iters", "newton_fallback_frac",
    "cg_iters", "particle_count",
]

ERRORS_COLUMNS = ["dx", "error_sl", "error_bslqb_l1", "error_bslqb_lc"]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


class CsvWriter:
    """Append-ordered CSV with full-precision floats."""

    def __init__(self, path, columns):
        self.path = path
        self.columns = columns
        self._fh = open(path, "w")
        self._fh.write(",".join(columns) + "\n")

    def write_row(self, values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the header")
        self._fh.write(",".join(_fmt(v) for v in values) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
