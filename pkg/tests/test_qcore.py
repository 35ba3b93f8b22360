"""Structural checks for states, POVMs, assemblies, and basis toolkits."""

import itertools

import numpy as np
import pytest

from qalloc.errors import DomainError, ShapeError
from qalloc.qcore import (Assembly, DensityMatrix, Ket, Observable, Povm,
                          ProductAssembly, computational_basis, dagger,
                          density_from_ket, depolarize_assembly, expectation,
                          fourier_basis, is_unbiased_pair, kron_all,
                          maximally_mixed, mix_assemblies, mub_pair_assembly,
                          partial_trace, partial_trace_matrix,
                          product_assembly, rank1_basis, reduce_assembly,
                          trivial_assembly)


def random_density(rng, dim):
    mat = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    mat = mat @ dagger(mat)
    return DensityMatrix(mat / np.trace(mat))


def test_ket_requires_unit_norm():
    Ket(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        Ket(np.array([1.0, 1.0]))


def test_ket_projector_and_tensor():
    k = Ket(np.array([1.0, 1.0]) / np.sqrt(2))
    proj = k.projector()
    assert np.allclose(proj, proj @ proj)
    joint = k.tensor(Ket(np.array([0.0, 1.0])))
    assert joint.dim == 4
    assert np.allclose(joint.amplitudes, [0, 1 / np.sqrt(2), 0, 1 / np.sqrt(2)])


def test_density_matrix_validation():
    with pytest.raises(DomainError):
        DensityMatrix(np.array([[1.0, 0.5], [0.0, 0.0]]))  # not Hermitian
    with pytest.raises(DomainError):
        DensityMatrix(np.eye(2))  # trace 2
    with pytest.raises(DomainError):
        DensityMatrix(np.diag([1.5, -0.5]))  # negative eigenvalue
    rho = maximally_mixed(3)
    assert rho.dim == 3 and np.allclose(rho.entries, np.eye(3) / 3)


def test_density_entries_are_frozen():
    rho = maximally_mixed(2)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 5.0


def test_povm_validation():
    half = np.eye(2) / 2
    Povm((half, half))
    with pytest.raises(DomainError):
        Povm((half, half, half))  # sums to 1.5 I
    with pytest.raises(DomainError):
        Povm((np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])))  # negative element
    with pytest.raises(ShapeError):
        Povm((np.eye(2), np.eye(3)))


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_fourier_basis_is_unbiased_to_computational(d):
    comp = computational_basis(d)
    four = fourier_basis(d)
    gram_c = np.array([[abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
                        for b in comp] for a in comp])
    assert np.allclose(gram_c, np.eye(d), atol=1e-12)
    cross = np.array([[abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
                       for b in four] for a in comp])
    assert np.allclose(cross, np.full((d, d), 1.0 / d), atol=1e-12)
    assert is_unbiased_pair(comp, four, d)
    assert not is_unbiased_pair(comp, comp, d)


def test_is_unbiased_pair_structural_mismatch_is_false():
    assert not is_unbiased_pair(computational_basis(2), computational_basis(3), 2)
    assert not is_unbiased_pair(computational_basis(2), fourier_basis(2)[:1], 2)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_mub_pair_assembly_shape_and_closure(d):
    asm = mub_pair_assembly(d)
    assert asm.settings == 2 and asm.dim == d
    assert asm.outcome_counts == (d, d)
    for povm in asm.povms:
        total = sum(povm.elements)
        assert np.abs(total - np.eye(d)).max() < 1e-12


def test_rank1_basis_recovers_projectors():
    asm = mub_pair_assembly(3)
    for povm in asm.povms:
        kets = rank1_basis(povm)
        for ket, element in zip(kets, povm.elements):
            assert np.abs(ket.projector() - element).max() < 1e-10


def test_rank1_basis_rejects_mixed_elements():
    with pytest.raises(DomainError):
        rank1_basis(trivial_assembly(2, [2]).povms[0])


@pytest.mark.parametrize("n,d", [(2, 2), (3, 2), (2, 3)])
def test_product_assembly_expand_matches_kron(n, d):
    pa = product_assembly(n, d)
    assert pa.sites == n and pa.site_dims == (d,) * n
    expanded = pa.expand()
    assert expanded.dim == d ** n
    assert expanded.outcome_counts == (d ** n, d ** n)
    # Outcome tuples enumerate in itertools.product order.
    for x in range(pa.settings):
        site_elements = [a.povms[x].elements for a in pa.site_assemblies]
        for k, combo in enumerate(itertools.product(*site_elements)):
            assert np.abs(expanded.povms[x].elements[k] - kron_all(combo)).max() < 1e-12


def test_product_assembly_dimension_cap():
    qubit = mub_pair_assembly(2)
    with pytest.raises(DomainError):
        ProductAssembly((qubit,) * 13)  # 2^13 = 8192 exceeds the 4096 cap


def test_reduce_assembly_site_selection():
    pa = product_assembly(3, 2)
    kept = reduce_assembly(pa, [2, 0])
    assert kept.sites == 2
    with pytest.raises(DomainError):
        reduce_assembly(pa, [])
    with pytest.raises(DomainError):
        reduce_assembly(pa, [3])


def test_partial_trace_factors_product_state():
    rng = np.random.default_rng(11)
    rho_a = random_density(rng, 2)
    rho_b = random_density(rng, 3)
    joint = DensityMatrix(np.kron(rho_a.entries, rho_b.entries))
    assert np.abs(partial_trace(joint, (2, 3), keep=(0,)).entries
                  - rho_a.entries).max() < 1e-12
    assert np.abs(partial_trace(joint, (2, 3), keep=(1,)).entries
                  - rho_b.entries).max() < 1e-12


def test_partial_trace_of_maximally_entangled_is_mixed():
    phi = Ket(np.array([1, 0, 0, 1]) / np.sqrt(2))
    reduced = partial_trace(density_from_ket(phi), (2, 2), keep=(0,))
    assert np.abs(reduced.entries - np.eye(2) / 2).max() < 1e-12


def test_partial_trace_matrix_preserves_trace():
    rng = np.random.default_rng(5)
    mat = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    out = partial_trace_matrix(mat, (2, 3), keep=(1,))
    assert out.shape == (3, 3)
    assert abs(np.trace(out) - np.trace(mat)) < 1e-12


def test_expectation_diagonal_case():
    obs = Observable(np.diag([1.0, -1.0]), (-1.0, 1.0))
    rho = DensityMatrix(np.diag([0.75, 0.25]))
    assert abs(expectation(rho, obs) - 0.5) < 1e-15


def test_observable_pm1_requires_involution():
    with pytest.raises(DomainError):
        Observable(np.diag([1.0, 0.5]), (-1.0, 1.0))
    Observable(np.diag([1.0, 0.5]), (1.0, 0.5))  # other outcome sets pass


def test_observable_from_effects():
    povm = mub_pair_assembly(2).povms[1]
    obs = Observable.from_effects(povm.elements, (1.0, -1.0))
    expected = povm.elements[0] - povm.elements[1]
    assert np.abs(obs.entries - expected).max() < 1e-12
    with pytest.raises(ShapeError):
        Observable.from_effects(povm.elements, (1.0,))


def test_trivial_assembly_elements():
    asm = trivial_assembly(3, [2, 4])
    assert asm.outcome_counts == (2, 4)
    assert np.allclose(asm.povms[0].elements[0], np.eye(3) / 2)
    assert np.allclose(asm.povms[1].elements[3], np.eye(3) / 4)


def test_mix_and_depolarize_assemblies():
    asm = mub_pair_assembly(2)
    noise = trivial_assembly(2, asm.outcome_counts)
    mixed = mix_assemblies(asm, noise, 0.7)
    dep = depolarize_assembly(asm, 0.7)
    for x in range(2):
        for a in range(2):
            want = 0.7 * asm.povms[x].elements[a] + 0.3 * noise.povms[x].elements[a]
            assert np.abs(mixed.povms[x].elements[a] - want).max() < 1e-12
            assert np.abs(dep.povms[x].elements[a] - want).max() < 1e-12
    ident = depolarize_assembly(asm, 1.0)
    for x in range(2):
        for a in range(2):
            assert np.abs(ident.povms[x].elements[a]
                          - asm.povms[x].elements[a]).max() < 1e-12
    with pytest.raises(DomainError):
        depolarize_assembly(asm, 1.2)


def test_assembly_requires_common_dimension():
    with pytest.raises(ShapeError):
        Assembly((mub_pair_assembly(2).povms[0], mub_pair_assembly(3).povms[0]))
