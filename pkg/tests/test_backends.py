"""Cross-checks between the compiled kernels and the pure-Python fallback."""

import numpy as np
import pytest

from qflowsim import _kernels_py
from qflowsim._backend import BACKEND
from qflowsim.fock import SectorBasis

compiled = pytest.importorskip("qflowsim._kernels")


def test_backend_identifiers():
    assert _kernels_py.BACKEND == "python"
    assert compiled.BACKEND == "cython"
    assert BACKEND in ("python", "cython")


def _basis_dets(n_spatial, n_electrons):
    return SectorBasis.for_reference(n_spatial, n_electrons).determinants


def test_excitation_table_agreement():
    dets = _basis_dets(4, 4)
    cases = [([0], [4]), ([0, 1], [4, 5]), ([1, 2], [5, 6]),
             ([0, 1, 2], [4, 5, 6]), ([0, 1, 2, 3], [4, 5, 6, 7])]
    for ann, cre in cases:
        s1, d1, p1 = _kernels_py.excitation_table(dets, ann, cre)
        s2, d2, p2 = compiled.excitation_table(dets, ann, cre)
        assert np.array_equal(s1, s2)
        assert np.array_equal(d1, d2)
        assert np.array_equal(p1, p2)


def test_sector_hamiltonian_agreement(h4_30):
    h = h4_30.h
    dets = h4_30.basis.determinants
    a = _kernels_py.sector_hamiltonian(dets, h.n_spin, h.h, h.v,
                                       h.core_energy)
    b = compiled.sector_hamiltonian(dets, h.n_spin, h.h, h.v, h.core_energy)
    assert np.max(np.abs(a - b)) < 1e-12


def test_sector_hamiltonian_agreement_restricted(h6_20):
    """CAS-restricted bases exercise the missing-target code path."""
    from qflowsim.spectra import cas_basis
    cas = cas_basis(6, 6, (1, 2), (3, 4))
    h = h6_20.h
    dets = cas.basis.determinants
    a = _kernels_py.sector_hamiltonian(dets, h.n_spin, h.h, h.v,
                                       h.core_energy)
    b = compiled.sector_hamiltonian(dets, h.n_spin, h.h, h.v, h.core_energy)
    assert np.max(np.abs(a - b)) < 1e-12
