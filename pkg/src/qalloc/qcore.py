"""Quantum measurement primitives.

Kets, density matrices, POVMs and assemblies (one POVM per measurement
setting), tensor-product assemblies with reductions, mutually unbiased basis
construction, partial traces and observable expectations.  All objects are
immutable after construction and validate their defining structure on
construction; tolerances can be overridden per call.
"""

from __future__ import annotations

import itertools
from dataclasses import InitVar, dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ShapeError

NORM_TOL = 1e-12
STRUCT_TOL = 1e-10

# Dense complex matrices only; keeps product expansions tractable.
MAX_DIM = 4096


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _as_vector(amplitudes) -> np.ndarray:
    vec = np.asarray(amplitudes, dtype=complex)
    if vec.ndim != 1 or vec.size == 0:
        raise ShapeError("amplitudes must be a non-empty 1-D complex vector")
    return vec


def _as_matrix(entries, dim: int | None = None) -> np.ndarray:
    mat = np.asarray(entries, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {mat.shape}")
    if dim is not None and mat.shape[0] != dim:
        raise ShapeError(f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
    return mat


def dagger(mat: np.ndarray) -> np.ndarray:
    return np.conj(mat).T


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True)
class Ket:
    """Unit-norm complex vector."""

    amplitudes: np.ndarray
    tol: InitVar[float] = NORM_TOL

    def __post_init__(self, tol: float):
        vec = _as_vector(self.amplitudes)
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > tol:
            raise DomainError(f"ket norm {norm} deviates from 1 beyond {tol}")
        object.__setattr__(self, "amplitudes", _freeze(vec))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, np.conj(self.amplitudes))

    def tensor(self, other: "Ket") -> "Ket":
        return Ket(np.kron(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    entries: np.ndarray
    tol: InitVar[float] = NORM_TOL

    def __post_init__(self, tol: float):
        mat = _as_matrix(self.entries)
        if np.abs(mat - dagger(mat)).max() > tol:
            raise DomainError("density matrix is not Hermitian within tolerance")
        trace = complex(np.trace(mat)).real
        if abs(trace - 1.0) > tol:
            raise DomainError(f"density matrix trace {trace} deviates from 1")
        if np.linalg.eigvalsh(mat).min() < -STRUCT_TOL:
            raise DomainError("density matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "entries", _freeze(mat))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def density_from_ket(ket: Ket) -> DensityMatrix:
    return DensityMatrix(ket.projector())


def maximally_mixed(dim: int) -> DensityMatrix:
    if dim < 1:
        raise DomainError("dimension must be >= 1")
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class Povm:
    """Positive operator-valued measure: PSD elements summing to identity."""

    elements: tuple
    tol: InitVar[float] = STRUCT_TOL

    def __post_init__(self, tol: float):
        if len(self.elements) == 0:
            raise ShapeError("a POVM needs at least one element")
        mats = tuple(_as_matrix(e) for e in self.elements)
        dim = mats[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for k, mat in enumerate(mats):
            if mat.shape[0] != dim:
                raise ShapeError("POVM elements must share one dimension")
            if np.abs(mat - dagger(mat)).max() > tol:
                raise DomainError(f"POVM element {k} is not Hermitian within {tol}")
            if np.linalg.eigvalsh(mat).min() < -tol:
                raise DomainError(f"POVM element {k} is not PSD within {tol}")
            total += mat
        if np.abs(total - np.eye(dim)).max() > tol:
            raise DomainError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", tuple(_freeze(m) for m in mats))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def outcomes(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class Assembly:
    """One POVM per measurement setting, all on a common dimension."""

    povms: tuple

    def __post_init__(self):
        if len(self.povms) == 0:
            raise ShapeError("an assembly needs at least one setting")
        povms = tuple(self.povms)
        if not all(isinstance(p, Povm) for p in povms):
            raise ShapeError("assembly settings must be Povm instances")
        dim = povms[0].dim
        if any(p.dim != dim for p in povms):
            raise ShapeError("assembly settings must share one dimension")
        object.__setattr__(self, "povms", povms)

    @property
    def dim(self) -> int:
        return self.povms[0].dim

    @property
    def settings(self) -> int:
        return len(self.povms)

    @property
    def outcome_counts(self) -> tuple:
        return tuple(p.outcomes for p in self.povms)


@dataclass(frozen=True)
class ProductAssembly:
    """Per-site assemblies measured in parallel, one shared setting index."""

    site_assemblies: tuple

    def __post_init__(self):
        sites = tuple(self.site_assemblies)
        if len(sites) == 0:
            raise ShapeError("a product assembly needs at least one site")
        if not all(isinstance(a, Assembly) for a in sites):
            raise ShapeError("sites must be Assembly instances")
        m = sites[0].settings
        if any(a.settings != m for a in sites):
            raise ShapeError("site assemblies must share the setting count")
        total = 1
        for a in sites:
            total *= a.dim
        if total > MAX_DIM:
            raise DomainError(f"expanded dimension {total} exceeds cap {MAX_DIM}")
        object.__setattr__(self, "site_assemblies", sites)

    @property
    def sites(self) -> int:
        return len(self.site_assemblies)

    @property
    def site_dims(self) -> tuple:
        return tuple(a.dim for a in self.site_assemblies)

    @property
    def settings(self) -> int:
        return self.site_assemblies[0].settings

    def expand(self) -> Assembly:
        """Tensor the per-site POVMs into one Assembly on the joint space."""
        povms = []
        for x in range(self.settings):
            site_povms = [a.povms[x] for a in self.site_assemblies]
            elements = [
                kron_all(combo)
                for combo in itertools.product(*(p.elements for p in site_povms))
            ]
            povms.append(Povm(tuple(elements)))
        return Assembly(tuple(povms))


@dataclass(frozen=True)
class Observable:
    """Hermitian operator with a declared outcome set.

    ``entries`` is the outcome-weighted sum of the effect operators, so the
    expectation is a plain trace.  Observables with outcome set {-1, +1} must
    square to the identity.
    """

    entries: np.ndarray
    outcome_values: tuple
    tol: InitVar[float] = STRUCT_TOL

    def __post_init__(self, tol: float):
        mat = _as_matrix(self.entries)
        if np.abs(mat - dagger(mat)).max() > NORM_TOL:
            raise DomainError("observable is not Hermitian within 1e-12")
        values = tuple(float(v) for v in self.outcome_values)
        if len(values) == 0:
            raise DomainError("observable needs at least one outcome value")
        if set(values) == {-1.0, 1.0}:
            if np.abs(mat @ mat - np.eye(mat.shape[0])).max() > tol:
                raise DomainError("a +-1 observable must square to the identity")
        object.__setattr__(self, "entries", _freeze(mat))
        object.__setattr__(self, "outcome_values", values)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_effects(cls, effects: Sequence[np.ndarray], values: Sequence[float],
                     tol: float = STRUCT_TOL) -> "Observable":
        """Build sum_k v_k E_k after checking {E_k} is a POVM."""
        if len(effects) != len(values):
            raise ShapeError("effects and outcome values must pair up")
        povm = Povm(tuple(effects), tol)
        entries = sum(v * e for v, e in zip(values, povm.elements))
        return cls(entries, tuple(values), tol)


def computational_basis(d: int) -> list:
    if d < 2:
        raise DomainError("dimension must be >= 2")
    return [Ket(row) for row in np.eye(d, dtype=complex)]


def fourier_basis(d: int) -> list:
    """Discrete Fourier basis, unbiased with the computational basis."""
    if d < 2:
        raise DomainError("dimension must be >= 2")
    k = np.arange(d)
    omega = np.exp(2j * np.pi / d)
    return [Ket(omega ** (j * k) / np.sqrt(d)) for j in range(d)]


def _projective_povm(basis: Iterable[Ket]) -> Povm:
    return Povm(tuple(ket.projector() for ket in basis))


def mub_pair_assembly(d: int) -> Assembly:
    """Two-setting assembly of rank-1 projectors onto a pair of MUBs.

    Computational plus Fourier basis, a valid unbiased pair for every d >= 2.
    """
    return Assembly((
        _projective_povm(computational_basis(d)),
        _projective_povm(fourier_basis(d)),
    ))


def product_assembly(n_sites: int, d: int) -> ProductAssembly:
    """N parallel copies of the MUB pair, one shared setting index."""
    if n_sites < 1:
        raise DomainError("site count must be >= 1")
    site = mub_pair_assembly(d)
    return ProductAssembly((site,) * n_sites)


def reduce_assembly(pa: ProductAssembly, keep: Iterable[int]) -> ProductAssembly:
    """Restrict a product assembly to the sites in ``keep`` (factor dropping)."""
    kept = sorted(set(int(i) for i in keep))
    if not kept:
        raise DomainError("cannot reduce to an empty site set")
    if kept[0] < 0 or kept[-1] >= pa.sites:
        raise DomainError(f"site indices must lie in [0, {pa.sites - 1}]")
    return ProductAssembly(tuple(pa.site_assemblies[i] for i in kept))


def partial_trace_matrix(mat: np.ndarray, dims: Sequence[int],
                         keep: Iterable[int]) -> np.ndarray:
    """Partial trace of a square matrix over the sites not in ``keep``.

    Works on any matrix (no density-matrix validation); site order of the
    output follows ascending ``keep``.
    """
    dims = tuple(int(x) for x in dims)
    n = len(dims)
    mat = _as_matrix(mat)
    total = int(np.prod(dims))
    if mat.shape[0] != total:
        raise ShapeError(f"matrix dim {mat.shape[0]} != product of site dims {total}")
    kept = sorted(set(int(i) for i in keep))
    if not kept:
        raise DomainError("keep must be non-empty")
    if kept[0] < 0 or kept[-1] >= n:
        raise DomainError(f"site indices must lie in [0, {n - 1}]")

    tensor = mat.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DomainError("too many sites for the einsum contraction")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in kept:
            col[i] = row[i]
    out = "".join(row[i] for i in kept) + "".join(col[i] for i in kept)
    return np.einsum("".join(row) + "".join(col) + "->" + out, tensor).reshape(
        int(np.prod([dims[i] for i in kept])), -1)


def partial_trace(rho: DensityMatrix, dims: Sequence[int],
                  keep: Iterable[int]) -> DensityMatrix:
    return DensityMatrix(partial_trace_matrix(rho.entries, dims, keep))


def is_unbiased_pair(basis_a: Sequence[Ket], basis_b: Sequence[Ket],
                     d_total: int, tol: float = STRUCT_TOL) -> bool:
    """Check mutual unbiasedness of two orthonormal bases.

    True iff same-basis overlap-squares match delta_ab and all cross
    overlap-squares match 1/d_total, all within ``tol``.  Returns False on
    any structural mismatch instead of raising.
    """
    if d_total < 2:
        return False
    for basis in (basis_a, basis_b):
        if len(basis) != d_total or any(k.dim != d_total for k in basis):
            return False
    mat_a = np.array([k.amplitudes for k in basis_a])
    mat_b = np.array([k.amplitudes for k in basis_b])
    for mat in (mat_a, mat_b):
        gram = np.abs(mat @ dagger(mat)) ** 2
        if np.abs(gram - np.eye(d_total)).max() > tol:
            return False
    cross = np.abs(mat_a @ dagger(mat_b)) ** 2
    return bool(np.abs(cross - 1.0 / d_total).max() <= tol)


def rank1_basis(povm: Povm, tol: float = 1e-8) -> list:
    """Recover the kets of a rank-1 projective POVM (phases arbitrary)."""
    kets = []
    for k, element in enumerate(povm.elements):
        vals, vecs = np.linalg.eigh(element)
        if abs(vals[-1] - 1.0) > tol or np.abs(vals[:-1]).max() > tol:
            raise DomainError(f"element {k} is not a rank-1 projector")
        kets.append(Ket(vecs[:, -1]))
    return kets


def expectation(rho: DensityMatrix, obs: Observable) -> float:
    if rho.dim != obs.dim:
        raise ShapeError(f"state dim {rho.dim} != observable dim {obs.dim}")
    return float(np.trace(obs.entries @ rho.entries).real)


def trivial_assembly(dim: int, outcome_counts: Sequence[int]) -> Assembly:
    """Uninformative assembly: every element is identity / outcome count."""
    if dim < 1:
        raise DomainError("dimension must be >= 1")
    povms = []
    for count in outcome_counts:
        if count < 1:
            raise DomainError("each setting needs at least one outcome")
        povms.append(Povm(tuple(np.eye(dim, dtype=complex) / count
                                for _ in range(count))))
    return Assembly(tuple(povms))


def mix_assemblies(a: Assembly, b: Assembly, weight: float) -> Assembly:
    """Element-wise convex mixture weight*a + (1-weight)*b."""
    if not 0.0 <= weight <= 1.0:
        raise DomainError("mixing weight must lie in [0, 1]")
    if a.dim != b.dim or a.outcome_counts != b.outcome_counts:
        raise ShapeError("assemblies must share dimension and outcome counts")
    povms = []
    for pa, pb in zip(a.povms, b.povms):
        povms.append(Povm(tuple(weight * ea + (1.0 - weight) * eb
                                for ea, eb in zip(pa.elements, pb.elements))))
    return Assembly(tuple(povms))


def depolarize_assembly(assembly: Assembly, visibility: float) -> Assembly:
    """Mix an assembly with the trivial one at the given visibility."""
    noise = trivial_assembly(assembly.dim, assembly.outcome_counts)
    return mix_assemblies(assembly, noise, visibility)
