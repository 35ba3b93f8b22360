"""Alternating-projection feasibility loop, batched-numpy backend.

Finds a point in the intersection of the product PSD cone (one block per
variable matrix) and an affine set ``sum_b coeffs[r, b] * X_b = rhs[r]``.
The affine projection matrix ``proj = coeffs.T @ pinv(coeffs @ coeffs.T)``
is precomputed by the caller; rows may be linearly dependent.
"""

from __future__ import annotations

import numpy as np

CONVERGED = 0
CAP_REACHED = 1
STALLED = 2


def run_alternating_projections(coeffs: np.ndarray, proj: np.ndarray,
                                rhs: np.ndarray, x0: np.ndarray, tol: float,
                                max_iter: int, check_every: int = 500,
                                stall_ratio: float = 0.999,
                                stall_floor: float = 0.0):
    """Alternate affine and blockwise-PSD projections from ``x0``.

    Returns ``(x, residual, iterations, status)`` where ``x`` is the last
    cone-projected iterate and ``residual`` is the max over constraint rows
    of the Frobenius norm of its affine violation.  Status ``STALLED`` is
    reported only while the residual still exceeds ``stall_floor``, so a
    caller can distinguish a hopeless plateau from slow convergence.
    """
    x = np.array(x0, dtype=complex, copy=True)
    residual = np.inf
    checkpoint = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        gap = np.tensordot(coeffs, x, axes=(1, 0)) - rhs
        residual = float(np.sqrt((np.abs(gap) ** 2).sum(axis=(1, 2)).max()))
        if residual <= tol:
            return x, residual, iterations, CONVERGED
        if iterations % check_every == 0:
            if residual > stall_floor and residual > stall_ratio * checkpoint:
                return x, residual, iterations, STALLED
            checkpoint = residual
        x -= np.tensordot(proj, gap, axes=(1, 0))
        x += np.conj(np.transpose(x, (0, 2, 1)))
        x *= 0.5
        vals, vecs = np.linalg.eigh(x)
        np.clip(vals, 0.0, None, out=vals)
        x = np.einsum("bij,bj,bkj->bik", vecs, vals, np.conj(vecs))
    return x, residual, iterations, CAP_REACHED
