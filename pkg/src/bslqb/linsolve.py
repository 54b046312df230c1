"""Jacobi-preconditioned conjugate gradients for the SPD solves.

Hand-rolled (rather than scipy.sparse.linalg.cg) because the callers need
negative-curvature detection, optional null-mode deflation and a
deterministic iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class IndefiniteOperatorError(RuntimeError):
    """The operator produced negative curvature: it is not SPD."""


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool


def pcg(apply_op, b, diag=None, tol=1e-10, max_iters=None, deflate=None,
        atol=0.0, x0=None) -> CGResult:
    """Solve A x = b, A symmetric positive (semi)definite.

    apply_op: callable v -> A v
    diag:     Jacobi preconditioner diagonal (None = identity)
    tol:      relative, on ||r||_2 vs ||b||_2
    atol:     absolute floor on the stopping residual
    deflate:  optional null vector; b and iterates are kept orthogonal to it
    x0:       optional warm start
    """
    b = np.asarray(b, dtype=np.float64)
    n = b.size
    if max_iters is None:
        max_iters = 10 * n

    if deflate is not None:
        v = deflate / np.linalg.norm(deflate)
        b = b - v * (v @ b)

    inv_diag = None
    if diag is not None:
        d = np.asarray(diag, dtype=np.float64)
        # floor tiny diagonals so (near-)degenerate rows do not blow up the
        # preconditioned residual
        floor = np.max(np.abs(d)) * 1e-14 + 1e-300
        inv_diag = 1.0 / np.maximum(np.abs(d), floor)

    bnorm = np.linalg.norm(b)
    target = max(tol * bnorm, atol)
    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        x = np.asarray(x0, dtype=np.float64).copy()
        r = b - apply_op(x)
        if deflate is not None:
            r -= v * (v @ r)
    if np.linalg.norm(r) <= target:
        if deflate is not None:
            x -= v * (v @ x)
        return CGResult(x, 0, float(np.linalg.norm(r)), True)

    z = r * inv_diag if inv_diag is not None else r.copy()
    p = z.copy()
    rz = r @ z
    res = bnorm
    for k in range(1, max_iters + 1):
        Ap = apply_op(p)
        pAp = p @ Ap
        if pAp <= 0.0:
            pnorm2 = p @ p
            if pAp < -1e-12 * pnorm2 * max(1.0, np.abs(rz)):
                raise IndefiniteOperatorError(
                    f"negative curvature p^T A p = {pAp:.3e} at iteration {k}"
                )
            # numerically zero curvature along p: converged as far as CG can go
            return CGResult(x, k - 1, res, res <= target)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if deflate is not None and k % 64 == 0:
            r -= v * (v @ r)
        res = np.linalg.norm(r)
        if res <= target:
            if deflate is not None:
                x -= v * (v @ x)
            return CGResult(x, k, res, True)
        z = r * inv_diag if inv_diag is not None else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if deflate is not None:
        x -= v * (v @ x)
    return CGResult(x, max_iters, res, False)
