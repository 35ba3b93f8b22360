"""Backend parity and behavior of the alternating-projection kernel."""

import os
import subprocess
import sys

import numpy as np
import pytest

from qalloc.incompatibility import _constraint_system, _start_point
from qalloc.kernels import (BACKEND, CAP_REACHED, CONVERGED, STALLED,
                            available_backends, run_alternating_projections)
from qalloc.qcore import mub_pair_assembly, trivial_assembly

BACKENDS = sorted(available_backends())


def slack_system(assembly, level):
    coeffs, proj, rhs, n_parent, _ = _constraint_system(assembly, with_slacks=True)
    rhs[0] = (1.0 + level) * np.eye(assembly.dim)
    x0 = _start_point(coeffs.shape[1], n_parent, assembly.dim, level)
    return coeffs, proj, rhs, x0


def test_compiled_backend_is_available():
    # The build ships the extension; parity tests below must compare two backends.
    assert BACKEND == "compiled"
    assert BACKENDS == ["compiled", "python"]


@pytest.mark.parametrize("backend", BACKENDS)
def test_feasible_system_converges(backend):
    coeffs, proj, rhs, x0 = slack_system(trivial_assembly(2, [2, 2]), 0.0)
    x, residual, iterations, status = run_alternating_projections(
        coeffs, proj, rhs, x0, tol=1e-9, max_iter=1000, backend=backend)
    assert status == CONVERGED
    assert residual <= 1e-9
    assert iterations <= 1000


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible_system_stalls(backend):
    # The qubit MUB pair is incompatible at mixing level 0.01.
    coeffs, proj, rhs, x0 = slack_system(mub_pair_assembly(2), 0.01)
    x, residual, iterations, status = run_alternating_projections(
        coeffs, proj, rhs, x0, tol=1e-8, max_iter=100_000,
        check_every=250, stall_floor=1e-7, backend=backend)
    assert status == STALLED
    assert residual > 1e-4


@pytest.mark.parametrize("backend", BACKENDS)
def test_cap_reported_when_iterations_run_out(backend):
    coeffs, proj, rhs, x0 = slack_system(mub_pair_assembly(2), 0.01)
    x, residual, iterations, status = run_alternating_projections(
        coeffs, proj, rhs, x0, tol=1e-12, max_iter=50, backend=backend)
    assert status == CAP_REACHED
    assert iterations == 50


@pytest.mark.parametrize("level", [0.0, 0.05, 0.2])
def test_backends_agree_step_for_step(level):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend built")
    coeffs, proj, rhs, x0 = slack_system(mub_pair_assembly(2), level)
    results = {
        b: run_alternating_projections(coeffs, proj, rhs, x0, tol=1e-9,
                                       max_iter=2000, backend=b)
        for b in BACKENDS
    }
    xa, ra, ia, sa = results[BACKENDS[0]]
    xb, rb, ib, sb = results[BACKENDS[1]]
    assert sa == sb
    assert ia == ib
    assert abs(ra - rb) < 1e-10
    assert np.abs(xa - xb).max() < 1e-8


@pytest.mark.parametrize("backend", BACKENDS)
def test_output_blocks_stay_positive(backend):
    coeffs, proj, rhs, x0 = slack_system(mub_pair_assembly(3), 0.1)
    x, residual, iterations, status = run_alternating_projections(
        coeffs, proj, rhs, x0, tol=1e-9, max_iter=500, backend=backend)
    for block in x:
        assert np.abs(block - block.conj().T).max() < 1e-10
        assert np.linalg.eigvalsh(block).min() > -1e-10


def test_env_var_forces_python_backend():
    env = dict(os.environ, QALLOC_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from qalloc.kernels import BACKEND; print(BACKEND)"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend_is_rejected():
    coeffs, proj, rhs, x0 = slack_system(trivial_assembly(2, [2]), 0.0)
    with pytest.raises(KeyError):
        run_alternating_projections(coeffs, proj, rhs, x0, tol=1e-9,
                                    max_iter=10, backend="fortran")
