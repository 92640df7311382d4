"""Restricted Hartree-Fock with DIIS and the MO-basis Hamiltonians.

The spin-orbital convention used throughout the package is fixed here:
spatial orbital p maps to alpha spin orbital 2p and beta spin orbital
2p+1, with spatial orbitals ordered by ascending orbital energy.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .molint import AOIntegralSet

__all__ = ["SCFResult", "SpatialMOIntegrals", "MOHamiltonian",
           "rhf_solve", "mo_transform_spatial", "mo_transform"]

DENSITY_TOL = 1e-10
ENERGY_TOL = 1e-12
MAX_CYCLES = 200
DIIS_DEPTH = 8


@dataclass
class SCFResult:
    """Converged closed-shell Fock solution."""

    mo_coefficients: np.ndarray   # n_ao x n_mo, columns are MOs
    orbital_energies: np.ndarray  # ascending, Hartree
    e_hf: float                   # total energy incl. nuclear repulsion
    n_electrons: int
    iterations: list              # (cycle, energy, density_rms)
    converged: bool = True

    @property
    def n_occ(self):
        return self.n_electrons // 2


def _fix_phases(c):
    """Make the largest-magnitude coefficient of each MO positive."""
    c = c.copy()
    for j in range(c.shape[1]):
        k = int(np.argmax(np.abs(c[:, j])))
        if c[k, j] < 0:
            c[:, j] = -c[:, j]
    return c


def rhf_solve(ao: AOIntegralSet, n_electrons: int) -> SCFResult:
    """Closed-shell SCF: core-Hamiltonian guess, DIIS, S^{-1/2} orthogonalization."""
    if n_electrons % 2 != 0:
        raise NotImplementedError("only closed-shell (even electron) references")
    n_occ = n_electrons // 2
    if n_occ > ao.n_ao:
        raise ValueError("more occupied orbitals than basis functions")

    s, hcore, eri = ao.overlap, ao.core, ao.eri
    w, u = np.linalg.eigh(s)
    x = u @ np.diag(w ** -0.5) @ u.T

    def fock(dm):
        j = np.einsum("pqrs,rs->pq", eri, dm)
        k = np.einsum("prqs,rs->pq", eri, dm)
        return hcore + j - 0.5 * k

    def density(f):
        fp = x.T @ f @ x
        eps, cp = np.linalg.eigh(fp)
        c = x @ cp
        cocc = c[:, :n_occ]
        return 2.0 * cocc @ cocc.T, eps, c

    dm, _, _ = density(hcore)
    e_old = 0.0
    trace = []
    errs, focks = [], []
    for cycle in range(1, MAX_CYCLES + 1):
        f = fock(dm)
        # DIIS on the orthonormal-basis gradient FDS - SDF
        err = x.T @ (f @ dm @ s - s @ dm @ f) @ x
        errs.append(err)
        focks.append(f)
        if len(errs) > DIIS_DEPTH:
            errs.pop(0)
            focks.pop(0)
        if len(errs) > 1:
            m = len(errs)
            b = -np.ones((m + 1, m + 1))
            b[m, m] = 0.0
            for i in range(m):
                for j in range(m):
                    b[i, j] = np.vdot(errs[i], errs[j])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                coef = np.linalg.solve(b, rhs)[:m]
                f = sum(ci * fi for ci, fi in zip(coef, focks))
            except np.linalg.LinAlgError:
                pass
        dm_new, eps, c = density(f)
        e_elec = 0.5 * np.einsum("pq,pq->", dm_new, hcore + fock(dm_new))
        e_tot = float(e_elec) + ao.e_nuc
        drms = float(np.sqrt(np.mean((dm_new - dm) ** 2)))
        trace.append((cycle, e_tot, drms))
        if drms < DENSITY_TOL and abs(e_tot - e_old) < ENERGY_TOL:
            return SCFResult(_fix_phases(c), eps, e_tot, n_electrons, trace)
        dm, e_old = dm_new, e_tot
    raise ConvergenceError(
        f"SCF not converged in {MAX_CYCLES} cycles", trace=trace)


@dataclass
class SpatialMOIntegrals:
    """Spatial-orbital Hamiltonian: h, chemist-ordered (pq|rs), core energy."""

    n_orb: int
    core_energy: float
    h: np.ndarray      # n_orb x n_orb
    eri: np.ndarray    # (pq|rs)
    n_electrons: int


def mo_transform_spatial(ao: AOIntegralSet, scf: SCFResult) -> SpatialMOIntegrals:
    """Four-index transform of the AO integrals into the MO basis."""
    c = scf.mo_coefficients
    if c.shape[0] != ao.n_ao:
        raise ValueError("AO/SCF dimension mismatch")
    h = c.T @ ao.core @ c
    eri = np.einsum("pqrs,pi,qj,rk,sl->ijkl", ao.eri, c, c, c, c, optimize=True)
    return SpatialMOIntegrals(c.shape[1], ao.e_nuc, h, eri, scf.n_electrons)


@dataclass
class MOHamiltonian:
    """Spin-orbital Hamiltonian: one-body h and antisymmetrized <pq||rs>.

    Spin orbitals are interleaved: spatial p -> (alpha 2p, beta 2p+1).
    v is stored physicist-ordered and antisymmetrized, so
    H = core + sum h_pq p^+ q + 1/4 sum v_pqrs p^+ q^+ s r.
    """

    n_spatial: int
    core_energy: float
    h: np.ndarray   # 2n x 2n
    v: np.ndarray   # <pq||rs>, 2n^4
    n_electrons: int

    @property
    def n_spin(self):
        return 2 * self.n_spatial

    @classmethod
    def from_spatial(cls, sp: SpatialMOIntegrals) -> "MOHamiltonian":
        n = sp.n_orb
        ns = 2 * n
        h = np.zeros((ns, ns))
        for spin in (0, 1):
            h[spin::2, spin::2] = sp.h
        # physicist <pq|rs> = chemist (pr|qs), then spin delta factors
        phys = sp.eri.transpose(0, 2, 1, 3)
        spat = np.arange(ns) // 2
        spin = np.arange(ns) % 2
        same_pr = (spin[:, None] == spin[None, :]).astype(float)
        coul = phys[np.ix_(spat, spat, spat, spat)]
        # <pq|rs> in spin orbitals: (pr|qs) * delta(sp,sr) * delta(sq,ss)
        full = (coul * same_pr[:, None, :, None] * same_pr[None, :, None, :])
        v = full - full.transpose(0, 1, 3, 2)
        return cls(n, sp.core_energy, h, v, sp.n_electrons)


def mo_transform(ao: AOIntegralSet, scf: SCFResult) -> MOHamiltonian:
    """AO integrals + SCF orbitals -> antisymmetrized spin-orbital Hamiltonian."""
    return MOHamiltonian.from_spatial(mo_transform_spatial(ao, scf))


def spin_orbital_energies(h: MOHamiltonian):
    """Canonical orbital energies recovered from the Fock diagonal."""
    occ = list(range(h.n_electrons))
    return np.array([h.h[p, p] + sum(h.v[p, i, p, i] for i in occ)
                     for p in range(h.n_spin)])
