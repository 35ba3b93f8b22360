"""Joint measurability and generalized incompatibility robustness.

An assembly {M_{a|x}} is jointly measurable when a single parent POVM
{G_lam} reproduces every setting through classical post-processing.  With
deterministic responses the parent index lam runs over outcome tuples
(a_1, ..., a_m), one entry per setting, and the condition becomes a linear
system over PSD blocks:

    G_lam >= 0,   sum_lam G_lam = I,   sum_{lam: lam_x = a} G_lam = M_{a|x}.

The robustness of an incompatible assembly is the least mixing weight s
such that (M + s*N)/(1+s) is jointly measurable for some assembly N.
Scaling by (1+s) and absorbing N into slack operators S_{a|x} >= 0 turns
feasibility at level s into the same kind of system:

    G_lam >= 0,  sum_lam G_lam = (1+s)*I,  sum_{lam: lam_x = a} G_lam - S_{a|x} = M_{a|x}.

Feasibility is monotone in s (split the extra (s'-s)*I uniformly across the
parent blocks), so a bisection over s brackets the robustness.  Each probe
runs alternating projections between the product PSD cone and the affine
set; a converged run certifies feasibility, while an infeasible probe shows
up as a residual plateau well above the tolerance.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CapExceededError, DomainError, IndeterminateError
from .qcore import Assembly, ProductAssembly, reduce_assembly

logger = logging.getLogger(__name__)

DEFAULT_BRACKET_TOL = 1e-6
DEFAULT_FEAS_TOL = 1e-8
DEFAULT_MAX_ITER = 50_000
DEFAULT_S_MAX = 4.0
PARENT_OUTCOME_CAP = 64
DIM_CAP = 8

_CHECK_EVERY = 250


@dataclass(frozen=True)
class ParentCandidate:
    """Parent POVM blocks indexed by outcome tuples, with their residual.

    ``level`` is None for an exact joint-measurability certificate and the
    mixing level s for a robustness certificate (where the parent blocks sum
    to (1+s)*I and dominate the assembly elements settingwise).
    """

    parent_elements: tuple
    outcome_counts: tuple
    residual: float
    level: float | None = None


@dataclass(frozen=True)
class RobustnessResult:
    """Bisection bracket around the minimal feasible mixing level.

    ``value`` equals the upper endpoint ``bracket[1]``, the smallest level
    that was positively certified; ``certificate`` is the parent found there.
    """

    value: float
    bracket: tuple
    certificate: ParentCandidate


def _parent_tuples(outcome_counts) -> list:
    return list(itertools.product(*(range(o) for o in outcome_counts)))


def _check_caps(assembly: Assembly, dim_cap: int | None) -> None:
    parent_size = 1
    for o in assembly.outcome_counts:
        parent_size *= o
    if parent_size > PARENT_OUTCOME_CAP:
        raise CapExceededError(
            f"parent outcome count {parent_size} exceeds cap {PARENT_OUTCOME_CAP}")
    if dim_cap is not None and assembly.dim > dim_cap:
        raise CapExceededError(f"dimension {assembly.dim} exceeds cap {dim_cap}")


def _constraint_system(assembly: Assembly, with_slacks: bool):
    """Constraint rows over stacked blocks [G_lam..., S_{a|x}...].

    Returns (coeffs, proj, fixed_rhs, n_parent, pairs).  With slacks, row 0
    is the total-sum row whose right-hand side depends on the level s; the
    per-(x, a) marginal rows are fixed.  The marginal rows sum (over a, for
    each x) to the total row, so the system is rank-deficient and the affine
    projector uses a pseudoinverse.
    """
    counts = assembly.outcome_counts
    dim = assembly.dim
    tuples = _parent_tuples(counts)
    n_parent = len(tuples)
    pairs = [(x, a) for x, o in enumerate(counts) for a in range(o)]
    n_rows = (1 if with_slacks else 0) + len(pairs)
    n_blocks = n_parent + (len(pairs) if with_slacks else 0)

    coeffs = np.zeros((n_rows, n_blocks))
    offset = 0
    if with_slacks:
        coeffs[0, :n_parent] = 1.0
        offset = 1
    for r, (x, a) in enumerate(pairs):
        for k, tup in enumerate(tuples):
            if tup[x] == a:
                coeffs[offset + r, k] = 1.0
        if with_slacks:
            coeffs[offset + r, n_parent + r] = -1.0

    proj = coeffs.T @ np.linalg.pinv(coeffs @ coeffs.T)
    rhs = np.zeros((n_rows, dim, dim), dtype=complex)
    for r, (x, a) in enumerate(pairs):
        rhs[offset + r] = assembly.povms[x].elements[a]
    return coeffs, proj, rhs, n_parent, pairs


def _start_point(n_blocks: int, n_parent: int, dim: int, level: float) -> np.ndarray:
    x0 = np.zeros((n_blocks, dim, dim), dtype=complex)
    x0[:n_parent] = (1.0 + level) * np.eye(dim) / n_parent
    return x0


def parent_residual(assembly: Assembly, parent_elements, level: float | None) -> float:
    """Recompute a certificate's worst constraint violation from scratch.

    Violations counted: parent-block negativity, the total-sum row, and the
    setting marginals (Frobenius distance to the element for exact joint
    measurability, negativity of marginal - element at a robustness level).
    """
    counts = assembly.outcome_counts
    tuples = _parent_tuples(counts)
    if len(parent_elements) != len(tuples):
        raise DomainError("certificate size does not match the assembly")
    blocks = [np.asarray(g, dtype=complex) for g in parent_elements]
    worst = 0.0
    for g in blocks:
        worst = max(worst, max(0.0, -float(np.linalg.eigvalsh(g).min())))
    scale = 1.0 if level is None else 1.0 + level
    total = sum(blocks)
    worst = max(worst, float(np.linalg.norm(total - scale * np.eye(assembly.dim))))
    for x, povm in enumerate(assembly.povms):
        for a, element in enumerate(povm.elements):
            marginal = sum(g for g, tup in zip(blocks, tuples) if tup[x] == a)
            if level is None:
                worst = max(worst, float(np.linalg.norm(marginal - element)))
            else:
                gap_min = float(np.linalg.eigvalsh(marginal - element).min())
                worst = max(worst, max(0.0, -gap_min))
    return worst


def _classify(status: int, residual: float, tol: float) -> bool:
    """Map a kernel outcome to a feasibility verdict.

    Converged runs are feasible.  A stall or iteration cap with residual
    above 10*tol is a clean infeasibility plateau.  In between, the verdict
    would be a guess, so the caller retries or raises.
    """
    if status == kernels.CONVERGED or residual <= tol:
        return True
    if residual > 10.0 * tol:
        return False
    raise IndeterminateError(
        f"projection residual {residual:.3e} stopped between tol and 10*tol; "
        "raise the iteration cap or loosen the tolerance")


def joint_measurability_feasible(assembly: Assembly, tol: float = DEFAULT_FEAS_TOL,
                                 max_iter: int = DEFAULT_MAX_ITER):
    """Decide joint measurability; return (verdict, certificate or None)."""
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    _check_caps(assembly, dim_cap=None)
    coeffs, proj, rhs, n_parent, _ = _constraint_system(assembly, with_slacks=False)
    x0 = _start_point(coeffs.shape[1], n_parent, assembly.dim, 0.0)
    x, residual, iterations, status = kernels.run_alternating_projections(
        coeffs, proj, rhs, x0, tol, max_iter,
        check_every=_CHECK_EVERY, stall_floor=10.0 * tol)
    logger.debug("joint measurability probe: status=%s residual=%.3e iters=%d",
                 status, residual, iterations)
    if not _classify(status, residual, tol):
        return False, None
    elements = tuple(x[:n_parent])
    candidate = ParentCandidate(
        parent_elements=elements,
        outcome_counts=assembly.outcome_counts,
        residual=parent_residual(assembly, elements, None),
        level=None)
    return True, candidate


def generalized_robustness(assembly: Assembly, tol: float = DEFAULT_BRACKET_TOL,
                           feas_tol: float = DEFAULT_FEAS_TOL,
                           max_iter: int = DEFAULT_MAX_ITER,
                           s_max: float = DEFAULT_S_MAX) -> RobustnessResult:
    """Bracket the generalized robustness by bisection over the mixing level.

    Returns the smallest positively certified level as ``value`` together
    with the final bracket (width <= tol) and the parent certificate found
    at the upper endpoint.  Raises CapExceededError when even ``s_max`` is
    infeasible.  A probe that stops in the indeterminate residual zone is
    retried once with a quadrupled iteration cap before giving up.
    """
    if tol <= 0 or feas_tol <= 0 or s_max <= 0:
        raise DomainError("tolerances and s_max must be positive")
    _check_caps(assembly, dim_cap=DIM_CAP)
    coeffs, proj, rhs, n_parent, _ = _constraint_system(assembly, with_slacks=True)
    n_blocks = coeffs.shape[1]
    dim = assembly.dim
    eye = np.eye(dim)

    def probe(level: float):
        rhs[0] = (1.0 + level) * eye
        x0 = _start_point(n_blocks, n_parent, dim, level)
        for cap in (max_iter, 4 * max_iter):
            x, residual, iterations, status = kernels.run_alternating_projections(
                coeffs, proj, rhs, x0, feas_tol, cap,
                check_every=_CHECK_EVERY, stall_floor=10.0 * feas_tol)
            try:
                verdict = _classify(status, residual, feas_tol)
            except IndeterminateError:
                logger.debug("probe s=%.8f indeterminate at cap %d, retrying", level, cap)
                continue
            logger.debug("probe s=%.8f: feasible=%s residual=%.3e iters=%d",
                         level, verdict, residual, iterations)
            return verdict, x
        raise IndeterminateError(
            f"feasibility at level {level} undecided after {4 * max_iter} iterations")

    def certificate(level: float, x: np.ndarray) -> ParentCandidate:
        elements = tuple(x[:n_parent])
        return ParentCandidate(
            parent_elements=elements,
            outcome_counts=assembly.outcome_counts,
            residual=parent_residual(assembly, elements, level),
            level=level)

    feasible, x = probe(0.0)
    if feasible:
        return RobustnessResult(0.0, (0.0, 0.0), certificate(0.0, x))
    feasible, x = probe(s_max)
    if not feasible:
        raise CapExceededError(
            f"assembly is not feasible even at mixing level s_max={s_max}")
    lo, hi, x_hi = 0.0, s_max, x
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        feasible, x = probe(mid)
        if feasible:
            hi, x_hi = mid, x
        else:
            lo = mid
    return RobustnessResult(hi, (lo, hi), certificate(hi, x_hi))


def closed_form_mub_robustness(dim_total: int) -> float:
    """Robustness of a pair of MUBs on dimension D: (sqrt(D)-1)/(sqrt(D)+1)."""
    if dim_total < 2:
        raise DomainError("the closed form needs dimension >= 2")
    root = math.sqrt(dim_total)
    return (root - 1.0) / (root + 1.0)


def edge_robustness(pa: ProductAssembly, edge_sites, **kwargs) -> RobustnessResult:
    """Robustness of a hyperedge: reduce to its sites, expand, then solve.

    The compatible set is defined on the edge's composite system, so the
    reduced product assembly is expanded to a plain assembly first.
    """
    reduced = reduce_assembly(pa, edge_sites)
    return generalized_robustness(reduced.expand(), **kwargs)
