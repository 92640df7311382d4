"""Shared fixtures: small hydrogen-chain systems built once per session."""

import numpy as np
import pytest

from qflowsim.molint import chain_geometry, build_ao_integrals
from qflowsim.scf import rhf_solve, mo_transform
from qflowsim.fock import SectorBasis, sector_hamiltonian


class System:
    """Bundle of everything downstream tests need for one geometry."""

    def __init__(self, n_atoms, spacing):
        self.geometry = chain_geometry(n_atoms, spacing)
        self.ao = build_ao_integrals(self.geometry)
        self.scf = rhf_solve(self.ao, n_atoms)
        self.h = mo_transform(self.ao, self.scf)
        self.basis = SectorBasis.for_reference(self.h.n_spatial,
                                               self.h.n_electrons)
        self.h_mat = sector_hamiltonian(self.h, self.basis)


@pytest.fixture(scope="session")
def h2_14():
    return System(2, 1.4)


@pytest.fixture(scope="session")
def h4_20():
    return System(4, 2.0)


@pytest.fixture(scope="session")
def h4_30():
    return System(4, 3.0)


@pytest.fixture(scope="session")
def h6_20():
    return System(6, 2.0)


@pytest.fixture(scope="session")
def h6_30():
    return System(6, 3.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260824)
