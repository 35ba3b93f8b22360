"""Bell and contextuality correlation evaluators with operator identities.

Cyclic nearest-neighbor correlations, the twelve-term three-setting
bipartite inequality (classical bound 4), the monotone value above a
classical bound, and two equivalent Bell-operator constructions tied by an
exact affine identity, together with the bound constants used downstream.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .qcore import DensityMatrix, Observable, dagger, expectation

COMMUTATOR_WARN_TOL = 1e-8


class NoncommutingNeighborsWarning(UserWarning):
    """Adjacent cyclic observables fail to commute beyond tolerance."""


@dataclass(frozen=True)
class BoundConstants:
    """Classical and quantum bound constants (fixed inputs, never recomputed).

    nu2 is the quantum-classical gap of the five-cycle correlation;
    nu1_bracket brackets the gap of the twelve-term inequality, and
    bqv_bracket brackets the quantum value of the projector-form operator.
    """

    nu2: float = 0.9442
    nu1_bracket: tuple = (1.0, 1.0034)
    bqv_bracket: tuple = (0.25, 0.25085)
    classical_i3322: float = 4.0

    @staticmethod
    def classical_cyclic(s: int) -> float:
        if s < 3:
            raise DomainError("cyclic scenarios need s >= 3")
        return float(s - 2)


BOUNDS = BoundConstants()


def _check_pm1(obs: Observable, label: str) -> None:
    if set(obs.outcome_values) != {-1.0, 1.0}:
        raise DomainError(f"{label} must have outcome values -1 and +1")


@dataclass(frozen=True)
class CyclicScenario:
    """State plus s observables B_1..B_s arranged on a cycle."""

    observables: tuple
    state: DensityMatrix

    def __post_init__(self):
        obs = tuple(self.observables)
        if len(obs) < 3:
            raise DomainError("cyclic scenarios need at least 3 observables")
        for k, o in enumerate(obs):
            _check_pm1(o, f"observable {k}")
            if o.dim != self.state.dim:
                raise ShapeError(f"observable {k} dim {o.dim} != state dim {self.state.dim}")
        object.__setattr__(self, "observables", obs)

    @property
    def s(self) -> int:
        return len(self.observables)


@dataclass(frozen=True)
class I3322Scenario:
    """Bipartite three-setting scenario on dim_a * dim_b.

    ``b_observables`` holds the three B-side observables in the roles they
    play in the twelve-term expression (first, fourth, sixth label).
    """

    state: DensityMatrix
    a_observables: tuple
    b_observables: tuple
    dim_a: int

    def __post_init__(self):
        a_obs = tuple(self.a_observables)
        b_obs = tuple(self.b_observables)
        if len(a_obs) != 3 or len(b_obs) != 3:
            raise ShapeError("the scenario needs exactly 3 observables per side")
        dim_a = int(self.dim_a)
        if dim_a < 2 or self.state.dim % dim_a != 0:
            raise ShapeError("state dim must factor as dim_a * dim_b")
        dim_b = self.state.dim // dim_a
        for k, o in enumerate(a_obs):
            _check_pm1(o, f"A observable {k}")
            if o.dim != dim_a:
                raise ShapeError(f"A observable {k} has dim {o.dim}, expected {dim_a}")
        for k, o in enumerate(b_obs):
            _check_pm1(o, f"B observable {k}")
            if o.dim != dim_b:
                raise ShapeError(f"B observable {k} has dim {o.dim}, expected {dim_b}")
        object.__setattr__(self, "a_observables", a_obs)
        object.__setattr__(self, "b_observables", b_obs)
        object.__setattr__(self, "dim_a", dim_a)

    @property
    def dim_b(self) -> int:
        return self.state.dim // self.dim_a


@dataclass(frozen=True)
class MixingOperation:
    """Convex mixing with a fixed state at the given weight."""

    weight: float
    mixing_state: DensityMatrix

    def __post_init__(self):
        if not 0.0 <= float(self.weight) <= 1.0:
            raise DomainError("mixing weight must lie in [0, 1]")
        object.__setattr__(self, "weight", float(self.weight))


def apply_mixing(rho: DensityMatrix, op: MixingOperation) -> DensityMatrix:
    if rho.dim != op.mixing_state.dim:
        raise ShapeError("state dims differ")
    lam = op.weight
    return DensityMatrix(lam * rho.entries + (1.0 - lam) * op.mixing_state.entries)


def _sym_product_expectation(rho: DensityMatrix, left: Observable,
                             right: Observable) -> tuple:
    """Expectation of the symmetrized product, plus the commutator norm."""
    lm, rm = left.entries, right.entries
    comm = lm @ rm - rm @ lm
    comm_norm = float(np.linalg.norm(comm, 2))
    product = 0.5 * (lm @ rm + rm @ lm)
    value = float(np.trace(product @ rho.entries).real)
    return value, comm_norm


def cyclic_correlation(scenario: CyclicScenario) -> float:
    """Nearest-neighbor cycle sum with the closing term sign-flipped.

    sum_{k=1}^{s-1} <B_k B_{k+1}> - <B_s B_1>.  Products are symmetrized;
    a warning reports adjacent pairs that do not commute, since the cycle's
    contextual reading assumes compatible neighbors.
    """
    obs = scenario.observables
    s = scenario.s
    total = 0.0
    worst_comm = 0.0
    for k in range(s):
        value, comm = _sym_product_expectation(scenario.state, obs[k], obs[(k + 1) % s])
        worst_comm = max(worst_comm, comm)
        total += value if k < s - 1 else -value
    if worst_comm > COMMUTATOR_WARN_TOL:
        warnings.warn(
            f"adjacent observables fail to commute (norm {worst_comm:.2e})",
            NoncommutingNeighborsWarning, stacklevel=2)
    return total


# (A-index, B-index or None, sign); None means a single-side marginal term.
_I3322_TERMS = (
    (None, 0, 1.0), (None, 1, 1.0), (0, None, 1.0), (1, None, 1.0),
    (0, 0, -1.0), (1, 0, -1.0), (2, 0, -1.0),
    (0, 1, -1.0), (1, 1, -1.0), (2, 1, 1.0),
    (0, 2, -1.0), (1, 2, 1.0),
)


def i3322_operator(scenario: I3322Scenario) -> np.ndarray:
    """The twelve-term operator whose expectation i3322_correlation takes."""
    da, db = scenario.dim_a, scenario.dim_b
    eye_a, eye_b = np.eye(da), np.eye(db)
    total = np.zeros((da * db, da * db), dtype=complex)
    for ia, ib, sign in _I3322_TERMS:
        left = eye_a if ia is None else scenario.a_observables[ia].entries
        right = eye_b if ib is None else scenario.b_observables[ib].entries
        total += sign * np.kron(left, right)
    return total


def i3322_correlation(scenario: I3322Scenario) -> float:
    """Twelve-term three-setting correlation; classically bounded by 4."""
    op = i3322_operator(scenario)
    return float(np.trace(op @ scenario.state.entries).real)


def monotone_value(correlation_value: float, classical_bound: float) -> float:
    """Resource above the classical bound: max(0, value - bound)."""
    return max(0.0, float(correlation_value) - float(classical_bound))


def _check_projector(mat: np.ndarray, label: str, tol: float = 1e-10) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError(f"{label} must be a square matrix")
    if np.abs(mat - dagger(mat)).max() > tol or np.abs(mat @ mat - mat).max() > tol:
        raise DomainError(f"{label} is not a projector within {tol}")
    return mat


def _check_involution(mat: np.ndarray, label: str, tol: float = 1e-10) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError(f"{label} must be a square matrix")
    eye = np.eye(mat.shape[0])
    if np.abs(mat - dagger(mat)).max() > tol or np.abs(mat @ mat - eye).max() > tol:
        raise DomainError(f"{label} must square to the identity within {tol}")
    return mat


def build_vertesi_operator(a1, a2, a3, b1, b4, b6) -> np.ndarray:
    """Eleven-term Bell operator over projector-valued 0/1 observables."""
    a1, a2, a3 = (_check_projector(m, f"A{k}") for k, m in ((1, a1), (2, a2), (3, a3)))
    b1, b4, b6 = (_check_projector(m, f"B{k}") for k, m in ((1, b1), (4, b4), (6, b6)))
    eye_a = np.eye(a1.shape[0])
    eye_b = np.eye(b1.shape[0])
    kron = np.kron
    return (-kron(a2, eye_b) - kron(eye_a, b1) - 2.0 * kron(eye_a, b4)
            + kron(a1, b1) + kron(a1, b4) + kron(a2, b1) + kron(a2, b4)
            - kron(a1, b6) + kron(a2, b6) - kron(a3, b1) + kron(a3, b4))


def build_gamma_operator(a1p, a2p, a3p, b1p, b4p, b6p) -> np.ndarray:
    """Twelve-term Bell operator over +-1 observables.

    The sign relabelings (first and fourth B observables and the third A
    observable negated) are applied internally, matching the alternative
    form of the twelve-term inequality.
    """
    a1p = _check_involution(a1p, "A'1")
    a2p = _check_involution(a2p, "A'2")
    a3p = _check_involution(a3p, "A'3")
    b1p = _check_involution(b1p, "B'1")
    b4p = _check_involution(b4p, "B'4")
    b6p = _check_involution(b6p, "B'6")
    b1r, b4r, a3r = -b1p, -b4p, -a3p
    eye_a = np.eye(a1p.shape[0])
    eye_b = np.eye(b1p.shape[0])
    kron = np.kron
    return (kron(a1p, eye_b) + kron(a2p, eye_b) + kron(eye_a, b1r) + kron(eye_a, b4r)
            - kron(a1p, b1r) - kron(a1p, b4r) - kron(a2p, b1r) - kron(a2p, b4r)
            - kron(a1p, b6p) + kron(a2p, b6p) - kron(a3r, b1r) + kron(a3r, b4r))


def gamma_scenario(state: DensityMatrix, a1p, a2p, a3p, b1p, b4p, b6p,
                   dim_a: int) -> I3322Scenario:
    """Scenario whose i3322_correlation equals the gamma operator expectation."""
    obs = lambda m: Observable(np.asarray(m, dtype=complex), (-1.0, 1.0))
    return I3322Scenario(
        state=state,
        a_observables=(obs(a1p), obs(a2p), obs(-np.asarray(a3p, dtype=complex))),
        b_observables=(obs(-np.asarray(b1p, dtype=complex)),
                       obs(-np.asarray(b4p, dtype=complex)), obs(b6p)),
        dim_a=dim_a)


def _haar_rank1_projector(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    vec /= np.linalg.norm(vec)
    return np.outer(vec, np.conj(vec))


def verify_operator_identity(random_seed: int = 0, trials: int = 100) -> float:
    """Max residual of (gamma operator) - 4*(projector operator) - 4*identity.

    Each trial draws Haar-random rank-1 projectors per qubit slot, builds
    both operators (with the +-1 lifts of the projectors), and measures the
    largest absolute entry of the residual.  The identity is exact, so the
    residual is numerical noise.
    """
    if trials < 1:
        raise DomainError("at least one trial is required")
    eye2 = np.eye(2)
    worst = 0.0
    for trial in range(trials):
        rng = np.random.default_rng([int(random_seed), trial])
        a_proj = [_haar_rank1_projector(rng) for _ in range(3)]
        b_proj = [_haar_rank1_projector(rng) for _ in range(3)]
        vertesi = build_vertesi_operator(*a_proj, *b_proj)
        lifted = [2.0 * p - eye2 for p in a_proj + b_proj]
        gamma = build_gamma_operator(*lifted)
        residual = float(np.abs(gamma - 4.0 * vertesi - 4.0 * np.eye(4)).max())
        worst = max(worst, residual)
    return worst


def deterministic_max_cyclic(s: int) -> float:
    """Brute-force classical maximum of the cyclic correlation."""
    if s < 3:
        raise DomainError("cyclic scenarios need s >= 3")
    best = -np.inf
    for bits in itertools.product((-1.0, 1.0), repeat=s):
        value = sum(bits[k] * bits[k + 1] for k in range(s - 1)) - bits[-1] * bits[0]
        best = max(best, value)
    return float(best)


def deterministic_max_i3322() -> float:
    """Brute-force classical maximum of the twelve-term correlation."""
    best = -np.inf
    for a1, a2, a3, b1, b4, b6 in itertools.product((-1.0, 1.0), repeat=6):
        a = {0: a1, 1: a2, 2: a3, None: 1.0}
        b = {0: b1, 1: b4, 2: b6, None: 1.0}
        value = sum(sign * a[ia] * b[ib] for ia, ib, sign in _I3322_TERMS)
        best = max(best, value)
    return float(best)
