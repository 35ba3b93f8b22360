"""Compare the compiled projection kernel against the pure-Python fallback.

Runs the same incompatibility workloads through both backends and reports
median wall times plus the speedup.  Invoke from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 3]
"""

from __future__ import annotations

import argparse
import statistics
import time
from types import SimpleNamespace

import numpy as np

import qalloc.kernels as kernels
from qalloc.incompatibility import _constraint_system, _start_point, generalized_robustness
from qalloc.qcore import mub_pair_assembly


def time_call(fn, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def kernel_workload(backend: str, dim: int, level: float, max_iter: int):
    """A single fixed-level feasibility probe, pinned to one backend."""
    assembly = mub_pair_assembly(dim)
    coeffs, proj, rhs, n_parent, _ = _constraint_system(assembly, with_slacks=True)
    rhs[0] = (1.0 + level) * np.eye(assembly.dim)
    x0 = _start_point(coeffs.shape[1], n_parent, assembly.dim, level)

    def run():
        kernels.run_alternating_projections(coeffs, proj, rhs, x0, tol=1e-8,
                                            max_iter=max_iter, backend=backend)
    return run


def bisection_workload(backend: str, dim: int):
    """Full robustness bisection with the module-level backend swapped."""
    assembly = mub_pair_assembly(dim)
    fn = kernels.available_backends()[backend]

    def run():
        saved = kernels._impl
        kernels._impl = SimpleNamespace(run_alternating_projections=fn)
        try:
            generalized_robustness(assembly, tol=1e-4)
        finally:
            kernels._impl = saved
    return run


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = list(kernels.available_backends())
    if len(backends) < 2:
        print("compiled backend unavailable; timing the python fallback only")

    rows = []
    for label, make in (
        ("qubit pair, fixed-level probe (5k iters)",
         lambda b: kernel_workload(b, dim=2, level=0.05, max_iter=5000)),
        ("qutrit pair, fixed-level probe (2k iters)",
         lambda b: kernel_workload(b, dim=3, level=0.05, max_iter=2000)),
        ("qubit pair, full bisection (tol 1e-4)",
         lambda b: bisection_workload(b, dim=2)),
        ("qutrit pair, full bisection (tol 1e-4)",
         lambda b: bisection_workload(b, dim=3)),
    ):
        timings = {b: time_call(make(b), args.repeats) for b in backends}
        rows.append((label, timings))

    width = max(len(r[0]) for r in rows)
    header = f"{'workload':<{width}}  " + "  ".join(f"{b:>10}" for b in backends)
    if "compiled" in backends:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, timings in rows:
        line = f"{label:<{width}}  " + "  ".join(
            f"{timings[b] * 1e3:>8.1f}ms" for b in backends)
        if "compiled" in backends:
            ratio = timings["python"] / max(timings["compiled"], 1e-12)
            line += f"  {ratio:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
