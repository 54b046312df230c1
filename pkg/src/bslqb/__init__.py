"""Collocated B-spline incompressible flow solver (2D)."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
