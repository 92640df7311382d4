"""Hartree-Fock and MO transformation tests."""

import numpy as np
import pytest

from qflowsim.fock import (SectorBasis, WaveVector, apply_hamiltonian,
                           reference_determinant)
from qflowsim.molint import build_ao_integrals, chain_geometry
from qflowsim.scf import (MOHamiltonian, rhf_solve, mo_transform,
                          mo_transform_spatial, spin_orbital_energies)


def test_h6_energy(h6_20, h6_30):
    assert h6_20.scf.e_hf == pytest.approx(-3.1059, abs=5e-4)
    assert h6_30.scf.e_hf == pytest.approx(-2.6754, abs=5e-4)


def test_orthonormality_and_ordering(h6_20):
    c = h6_20.scf.mo_coefficients
    s = h6_20.ao.overlap
    assert np.allclose(c.T @ s @ c, np.eye(c.shape[1]), atol=1e-10)
    eps = h6_20.scf.orbital_energies
    assert np.all(np.diff(eps) >= 0)


def test_scf_trace_monotone(h6_20):
    energies = [e for _, e, _ in h6_20.scf.iterations]
    assert energies[-1] <= energies[0] + 1e-12


def test_odd_electrons_rejected():
    ao = build_ao_integrals(chain_geometry(3, 2.0))
    with pytest.raises(NotImplementedError):
        rhf_solve(ao, 3)


def test_two_electron_h2():
    ao = build_ao_integrals(chain_geometry(2, 1.4))
    scf = rhf_solve(ao, 2)
    # must match the core-orbital identity: E = 2 h_00 + (00|00) + e_nuc
    sp = mo_transform_spatial(ao, scf)
    e = 2.0 * sp.h[0, 0] + sp.eri[0, 0, 0, 0] + ao.e_nuc
    assert scf.e_hf == pytest.approx(e, abs=1e-10)


def test_mo_hamiltonian_invariants(h4_20):
    h = h4_20.h
    ns = h.n_spin
    assert np.allclose(h.h, h.h.T, atol=1e-12)
    v = h.v
    assert np.allclose(v, -v.transpose(1, 0, 2, 3), atol=1e-12)
    assert np.allclose(v, -v.transpose(0, 1, 3, 2), atol=1e-12)
    assert np.allclose(v, v.transpose(2, 3, 0, 1), atol=1e-12)
    # spin-forbidden one-body blocks vanish exactly
    spin = np.arange(ns) % 2
    assert np.all(h.h[spin[:, None] != spin[None, :]] == 0.0)


def test_reference_expectation_is_hf(h6_20):
    ref = WaveVector.reference(h6_20.basis)
    hv = apply_hamiltonian(h6_20.h, ref)
    assert ref.dot(hv) == pytest.approx(h6_20.scf.e_hf, abs=1e-10)


def test_brillouin(h6_20):
    """Singles rows of H vanish against the reference (canonical orbitals)."""
    h = h6_20.h
    basis = h6_20.basis
    ref = reference_determinant(h.n_electrons)
    col = h6_20.h_mat[:, basis.index_of(ref)]
    n_occ = h.n_electrons // 2
    for i in range(h.n_electrons):
        for a in range(2 * n_occ, h.n_spin):
            if i % 2 != a % 2:
                continue
            target = (ref ^ (1 << i)) | (1 << a)
            assert abs(col[basis.index_of(target)]) < 1e-10


def test_fock_diagonal(h6_20):
    eps = spin_orbital_energies(h6_20.h)
    expect = np.repeat(h6_20.scf.orbital_energies, 2)
    assert np.allclose(eps, expect, atol=1e-8)
    # off-diagonal Fock elements vanish for canonical orbitals
    h = h6_20.h
    occ = range(h.n_electrons)
    for p in range(h.n_spin):
        for q in range(h.n_spin):
            if p == q:
                continue
            f = h.h[p, q] + sum(h.v[p, i, q, i] for i in occ)
            assert abs(f) < 1e-8


def test_determinism():
    ao = build_ao_integrals(chain_geometry(4, 2.0))
    a = rhf_solve(ao, 4)
    b = rhf_solve(ao, 4)
    assert np.array_equal(a.mo_coefficients, b.mo_coefficients)
    assert a.e_hf == b.e_hf


def test_from_spatial_matches_direct(h4_20):
    sp = mo_transform_spatial(h4_20.ao, h4_20.scf)
    h = MOHamiltonian.from_spatial(sp)
    assert np.array_equal(h.h, h4_20.h.h)
    assert np.array_equal(h.v, h4_20.h.v)
    assert h.core_energy == h4_20.ao.e_nuc
