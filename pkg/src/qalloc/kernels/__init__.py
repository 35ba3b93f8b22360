"""Projection feasibility kernels with a compiled core and a numpy fallback.

The compiled backend (``_cyext``, Cython + LAPACK) is selected when its
extension imported cleanly; otherwise the batched-numpy implementation is
used.  Set ``QALLOC_PURE_PYTHON=1`` to force the fallback, e.g. for
benchmark baselines.  Both backends implement the same contract and are
held to agreement by the test suite.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pure
from ._pure import CAP_REACHED, CONVERGED, STALLED

if os.environ.get("QALLOC_PURE_PYTHON"):
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _cyext as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "python"


def available_backends() -> dict:
    """Name -> kernel function, for parity tests and benchmarks."""
    backends = {"python": _pure.run_alternating_projections}
    if BACKEND == "compiled":
        backends["compiled"] = _impl.run_alternating_projections
    return backends


def run_alternating_projections(coeffs, proj, rhs, x0, tol, max_iter,
                                check_every=500, stall_ratio=0.999,
                                stall_floor=0.0, backend=None):
    """Find a point in (product PSD cone) --intersect-- (affine set).

    See ``_pure.run_alternating_projections`` for the full contract; this
    wrapper normalizes dtypes/contiguity and dispatches to the selected
    backend.
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    proj = np.ascontiguousarray(proj, dtype=np.float64)
    rhs = np.ascontiguousarray(rhs, dtype=np.complex128)
    x0 = np.ascontiguousarray(x0, dtype=np.complex128)
    fn = available_backends()[backend] if backend else _impl.run_alternating_projections
    return fn(coeffs, proj, rhs, x0, float(tol), int(max_iter),
              int(check_every), float(stall_ratio), float(stall_floor))
