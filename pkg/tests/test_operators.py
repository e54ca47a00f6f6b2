"""Sector Hamiltonians, momentum blocks, and truncated droplet kernels."""

import math

import numpy as np
import pytest

from xxzdroplet.bethe import minimum_energy
from xxzdroplet.operators import (
    Anisotropy,
    BoundaryCondition,
    build_momentum_block,
    build_reduced_kernel,
    build_sector_hamiltonian,
    droplet_field,
)
from xxzdroplet.sector_basis import DimensionGuardError, sector_dimension
from xxzdroplet.spectra import dense_spectrum, rowsum_norm

Q_GRID = (0.1, 0.3, 0.5, 0.8, 0.95, 1.0)


def test_anisotropy_derived_quantities():
    a = Anisotropy(0.5)
    assert a.delta == 1.25
    assert a.alpha == 0.6
    assert a.hop == 0.4
    assert Anisotropy(1.0).alpha == 0.0
    assert Anisotropy(1.0).delta == 1.0
    for q in Q_GRID:
        a = Anisotropy(q)
        assert abs(a.alpha**2 + 1.0 / a.delta**2 - 1.0) < 1e-14


def test_anisotropy_rejects_bad_q():
    for q in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            Anisotropy(q)


def test_boundary_condition_validation():
    assert BoundaryCondition.kink().tag == "kink"
    with pytest.raises(ValueError):
        BoundaryCondition("twisted")
    with pytest.raises(ValueError):
        BoundaryCondition.droplet(float("inf"))
    with pytest.raises(ValueError):
        BoundaryCondition("kink", delta=1.0)
    with pytest.warns(UserWarning):
        BoundaryCondition.droplet(0.5)


def test_droplet_field_values():
    assert droplet_field((1,), 4, 1.0) == 0.5
    assert droplet_field((4,), 4, 1.0) == 0.5
    assert droplet_field((1, 4), 4, 1.0) == 1.0
    assert droplet_field((2, 3), 4, 1.0) == 0.0
    assert droplet_field((1, 4), 4, 2.0) == 2.0


def test_kink_two_site_matrix_frozen():
    op, basis = build_sector_hamiltonian(2, 1, BoundaryCondition.kink(), Anisotropy(0.5))
    assert tuple(basis) == ((1,), (2,))
    expected = np.array([[0.8, -0.4], [-0.4, 0.2]])
    assert np.allclose(op.to_dense(), expected, atol=1e-15)
    vals = np.linalg.eigvalsh(expected)
    assert abs(vals[0]) < 1e-15 and abs(vals[1] - 1.0) < 1e-15


@pytest.mark.parametrize("q", (0.3, 0.5, 0.9))
def test_kink_bond_is_projector(q):
    # h^2 = h on every two-site sector, the alpha^2 + 1/Delta^2 = 1 identity
    a = Anisotropy(q)
    for n in range(3):
        h = build_sector_hamiltonian(2, n, BoundaryCondition.kink(), a)[0].to_dense()
        assert np.abs(h @ h - h).max() < 1e-14


def test_ring_single_magnon_frozen():
    op, _ = build_sector_hamiltonian(4, 1, BoundaryCondition.cyclic(), Anisotropy(0.5))
    vals = np.linalg.eigvalsh(op.to_dense())
    assert np.allclose(vals, [0.2, 1.0, 1.0, 1.8], atol=1e-14)


def test_ground_sector_energies_are_zero():
    # all-up state has energy 0 for open/kink/cyclic and droplet
    a = Anisotropy(0.4)
    for bc in (
        BoundaryCondition.open(),
        BoundaryCondition.kink(),
        BoundaryCondition.cyclic(),
        BoundaryCondition.droplet(1.0),
    ):
        op, _ = build_sector_hamiltonian(6, 0, bc, a)
        assert abs(op.to_dense()[0, 0]) < 1e-15


@pytest.mark.parametrize("tag", ("open", "kink", "cyclic"))
def test_sector_operators_exactly_symmetric(tag):
    a = Anisotropy(0.7)
    bc = BoundaryCondition(tag)
    for L, n in [(6, 2), (7, 3), (8, 4)]:
        mat = build_sector_hamiltonian(L, n, bc, a)[0].matrix
        assert (mat != mat.T).nnz == 0


def test_row_sum_bound():
    # max row 1-norm <= n (1 + 1/Delta) for all four boundary fields
    for q in (0.3, 0.5, 0.9):
        a = Anisotropy(q)
        bound_rate = 1.0 + 1.0 / a.delta
        for bc in (
            BoundaryCondition.open(),
            BoundaryCondition.kink(),
            BoundaryCondition.cyclic(),
            BoundaryCondition.droplet(1.0),
        ):
            for L in (4, 6, 8):
                for n in range(L + 1):
                    op, _ = build_sector_hamiltonian(L, n, bc, a)
                    assert rowsum_norm(op) <= n * bound_rate + 1e-12


def test_momentum_blocks_frozen_single_magnon():
    a = Anisotropy(0.5)
    expected = {0: 0.2, 1: 1.0, 2: 1.8, 3: 1.0}
    for k, e in expected.items():
        op, orbits = build_momentum_block(4, 1, k, a)
        assert op.dim == 1 and len(orbits) == 1
        assert abs(op.to_dense()[0, 0].real - e) < 1e-14


@pytest.mark.parametrize("L,n", [(4, 2), (6, 2), (6, 3), (8, 2)])
def test_momentum_blocks_tile_the_sector_spectrum(L, n):
    a = Anisotropy(0.5)
    full, _ = build_sector_hamiltonian(L, n, BoundaryCondition.cyclic(), a)
    sector_vals = np.linalg.eigvalsh(full.to_dense())
    block_vals = []
    for k in range(L):
        op, orbits = build_momentum_block(L, n, k, a)
        dense = op.to_dense()
        assert np.abs(dense - dense.conj().T).max() == 0.0
        assert op.dim == len(orbits)
        block_vals.extend(np.linalg.eigvalsh(dense))
    block_vals = np.sort(np.asarray(block_vals))
    assert block_vals.shape == sector_vals.shape
    assert np.abs(block_vals - sector_vals).max() < 1e-12


def test_momentum_block_validation():
    with pytest.raises(ValueError):
        build_momentum_block(4, 1, 4, Anisotropy(0.5))
    with pytest.raises(ValueError):
        build_momentum_block(4, 1, -1, Anisotropy(0.5))


def test_reduced_kernel_single_particle():
    a = Anisotropy(0.5)
    k0 = build_reduced_kernel(1, 0.0, a, 10)
    assert k0.dim == 1
    assert abs(k0.op.to_dense()[0, 0] - 0.2) < 1e-15
    kp = build_reduced_kernel(1, math.pi / 2, a, 10)
    assert abs(kp.op.to_dense()[0, 0] - 1.0) < 1e-15


def test_reduced_kernel_two_particle_frozen():
    # n_max = 2 box: diag (1, 2), both hop pairs stack to -2/(2 Delta)
    a = Anisotropy(0.5)
    kernel = build_reduced_kernel(2, 0.0, a, 2)
    expected = np.array([[1.0, -0.8], [-0.8, 2.0]])
    assert np.allclose(kernel.op.to_dense(), expected, atol=1e-15)


def test_reduced_kernel_diagonal_counts_tight_gaps():
    a = Anisotropy(0.5)
    kernel = build_reduced_kernel(3, 0.0, a, 4)
    dense = kernel.op.to_dense()
    for i, gaps in enumerate(kernel.domain):
        expected = 1.0 + sum(1 for g in gaps if g >= 2)
        assert abs(dense[i, i] - expected) < 1e-15


def test_reduced_kernel_sign_structure_and_symmetry():
    a = Anisotropy(0.3)
    kernel = build_reduced_kernel(3, 0.0, a, 6)
    dense = kernel.op.to_dense()
    assert np.abs(dense - dense.T).max() == 0.0
    off = dense - np.diag(np.diag(dense))
    assert off.max() <= 0.0
    assert rowsum_norm(kernel.op) <= 3 * (1.0 + 1.0 / a.delta) + 1e-12


def test_reduced_kernel_complex_hermitian():
    a = Anisotropy(0.5)
    kernel = build_reduced_kernel(2, math.pi / 5, a, 8)
    dense = kernel.op.to_dense()
    assert np.iscomplexobj(dense)
    assert np.abs(dense - dense.conj().T).max() == 0.0


def test_reduced_kernel_truncation_monotone_from_above():
    a = Anisotropy(0.5)
    target = minimum_energy(0.5, 2)
    last = math.inf
    for n_max in (2, 4, 8, 16, 32):
        kernel = build_reduced_kernel(2, 0.0, a, n_max)
        val = float(dense_spectrum(kernel.op, k=1).values[0])
        assert val <= last + 1e-14
        assert val >= target - 1e-12
        last = val
    assert abs(last - target) < 1e-6


def test_reduced_kernel_guards():
    with pytest.raises(ValueError):
        build_reduced_kernel(0, 0.0, Anisotropy(0.5), 5)
    with pytest.raises(DimensionGuardError):
        build_reduced_kernel(4, 0.0, Anisotropy(0.5), 200)


def test_large_sector_build_refused():
    with pytest.raises(DimensionGuardError):
        build_sector_hamiltonian(40, 20, BoundaryCondition.open(), Anisotropy(0.5))
    assert sector_dimension(40, 20) > 5_000_000
