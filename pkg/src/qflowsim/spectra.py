"""Exact diagonalization: full sector (ED) and complete-active-space (CAS-ED)."""

from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError
from .fock import SectorBasis, WaveVector, sector_hamiltonian, reference_determinant

__all__ = ["CASBasis", "exact_diag", "cas_ed", "cas_basis"]

DENSE_LIMIT = 20_000


@dataclass
class CASBasis:
    """Determinants with inactive occupied spatials frozen (doubly occupied)
    and inactive virtuals empty; active occupations run over all Sz=0
    distributions of the active electrons. The reference sits at index 0."""

    active_space: object      # ActiveSpace (flow module) or None
    basis: SectorBasis        # restricted determinant basis
    full_indices: np.ndarray  # positions of the CAS determinants in a full
                              # sector basis, aligned with `order`
    order: np.ndarray         # CAS determinants with the reference first

    @property
    def size(self):
        return len(self.order)


def cas_basis(n_spatial, n_electrons, occupied_active, virtual_active,
              full_basis: SectorBasis = None, active_space=None) -> CASBasis:
    """Enumerate the CAS determinant set for given active spatial orbitals."""
    occupied_active = sorted(occupied_active)
    virtual_active = sorted(virtual_active)
    n_occ = n_electrons // 2
    inactive_occ = [p for p in range(n_occ) if p not in occupied_active]
    frozen = sum((1 << (2 * p)) + (1 << (2 * p + 1)) for p in inactive_occ)
    active = occupied_active + virtual_active
    n_act_pairs = len(occupied_active)  # active alpha = active beta electrons

    from itertools import combinations
    dets = []
    for alphas in combinations(active, n_act_pairs):
        da = sum(1 << (2 * p) for p in alphas)
        for betas in combinations(active, n_act_pairs):
            dets.append(frozen + da + sum(1 << (2 * p + 1) for p in betas))
    if not dets:
        raise ValueError("empty CAS")

    ref = reference_determinant(n_electrons)
    order = sorted(dets)
    order.remove(ref)
    order = np.array([ref] + order, dtype=np.uint64)

    basis = SectorBasis.from_determinants(n_spatial, dets)
    if full_basis is not None:
        full_indices = np.array([full_basis.index_of(int(d)) for d in order],
                                dtype=np.int64)
    else:
        full_indices = np.zeros(0, dtype=np.int64)
    return CASBasis(active_space, basis, full_indices, order)


def _ground_state(mat, ref_index=0):
    """Lowest eigenpair of a dense symmetric matrix with deterministic sign.

    Degenerate ground levels resolve to the eigenvector with the largest
    reference overlap; the reference component is made non-negative.
    """
    w, u = np.linalg.eigh(mat)
    e0 = w[0]
    degen = np.nonzero(w - e0 < 1e-10)[0]
    k = degen[int(np.argmax(np.abs(u[ref_index, degen])))]
    vec = u[:, k]
    if vec[ref_index] < 0:
        vec = -vec
    return float(e0), vec


def exact_diag(h, sector: SectorBasis):
    """Ground state of H in the full (n_alpha, n_beta) sector."""
    if sector.size > DENSE_LIMIT:
        raise ResourceLimitError(
            f"sector dimension {sector.size} exceeds dense limit {DENSE_LIMIT}")
    mat = sector_hamiltonian(h, sector)
    ref = reference_determinant(sector.n_electrons)
    ref_index = sector.index_of(ref) if ref in sector else 0
    e0, vec = _ground_state(mat, ref_index)
    return e0, WaveVector(sector, vec)


def cas_ed(h, cas: CASBasis):
    """Ground state of the bare Hamiltonian projected onto the CAS."""
    if cas.size == 0:
        raise ValueError("empty CAS basis")
    mat = sector_hamiltonian(h, cas.basis)
    # reorder so the reference determinant is component 0
    perm = np.array([cas.basis.index_of(int(d)) for d in cas.order])
    mat = mat[np.ix_(perm, perm)]
    e0, vec = _ground_state(mat, 0)
    out = np.zeros(cas.basis.size)
    out[perm] = vec
    return e0, WaveVector(cas.basis, out)
