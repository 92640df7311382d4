"""Occupation-number-representation engine.

Determinants are integer bitsets over 2*n_spatial spin orbitals with the
interleaved convention (spatial p -> alpha 2p, beta 2p+1). All operators
act exactly within a fixed particle-number / Sz sector, and the single
exponentiation primitive is a truncated Taylor series, which terminates
exactly for excitation-only (nilpotent) generators.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from ._backend import excitation_table, sector_hamiltonian_matrix, BACKEND
from .errors import ConvergenceError

__all__ = [
    "ExcitationSignature", "SectorBasis", "WaveVector",
    "apply_creation", "apply_annihilation", "reference_determinant",
    "apply_hamiltonian", "apply_generator", "expm_apply",
    "generator_matrix", "sector_hamiltonian", "BACKEND",
]

DEFAULT_EXPM_TOL = 1e-12
MAX_EXPM_TERMS = 60


def _popcount_below(det: int, p: int) -> int:
    return (det & ((1 << p) - 1)).bit_count()


def apply_creation(det: int, p: int):
    """a+_p |det> -> (det', phase) or None if occupied."""
    if p < 0:
        raise ValueError("negative spin-orbital index")
    bit = 1 << p
    if det & bit:
        return None
    phase = -1 if _popcount_below(det, p) % 2 else 1
    return det | bit, phase


def apply_annihilation(det: int, p: int):
    """a_p |det> -> (det', phase) or None if empty."""
    if p < 0:
        raise ValueError("negative spin-orbital index")
    bit = 1 << p
    if not det & bit:
        return None
    phase = -1 if _popcount_below(det, p) % 2 else 1
    return det ^ bit, phase


def reference_determinant(n_electrons: int) -> int:
    """Closed-shell reference: lowest n_electrons/2 spatials doubly occupied."""
    return (1 << n_electrons) - 1


def occupation_counts(det: int):
    """(n_alpha, n_beta) of a determinant in the interleaved convention."""
    alpha = det & 0x5555555555555555
    beta = det & 0xAAAAAAAAAAAAAAAA
    return alpha.bit_count(), beta.bit_count()


@dataclass(frozen=True)
class ExcitationSignature:
    """Label of one particle-conserving excitation: which occupied spin
    orbitals are annihilated and which virtuals are created."""

    annihilated: tuple
    created: tuple

    def __post_init__(self):
        ann = tuple(sorted(int(p) for p in self.annihilated))
        cre = tuple(sorted(int(p) for p in self.created))
        if len(ann) != len(cre):
            raise ValueError("signature must conserve particle number")
        if set(ann) & set(cre):
            raise ValueError("annihilated and created sets must be disjoint")
        object.__setattr__(self, "annihilated", ann)
        object.__setattr__(self, "created", cre)

    @property
    def rank(self):
        return len(self.annihilated)

    @property
    def delta_sz(self):
        """2*Sz change: +1 per created alpha... counted in units of 1/2 spins."""
        up = sum(1 for p in self.created if p % 2 == 0)
        up -= sum(1 for p in self.annihilated if p % 2 == 0)
        dn = sum(1 for p in self.created if p % 2 == 1)
        dn -= sum(1 for p in self.annihilated if p % 2 == 1)
        return up - dn

    def spatials(self):
        return sorted({p // 2 for p in self.annihilated + self.created})

    def target(self, det: int):
        """Determinant reached from det, or None if Pauli-forbidden."""
        for p in self.annihilated:
            if not det & (1 << p):
                return None
        for p in self.created:
            if det & (1 << p):
                return None
        out = det
        for p in self.annihilated:
            out ^= 1 << p
        for p in self.created:
            out |= 1 << p
        return out

    def __str__(self):
        ann = ",".join(map(str, self.annihilated))
        cre = ",".join(map(str, self.created))
        return f"{ann} -> {cre}"


class SectorBasis:
    """Ordered basis of all determinants with fixed (n_alpha, n_beta)."""

    def __init__(self, n_spatial, n_alpha, n_beta, determinants=None):
        self.n_spatial = n_spatial
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        if determinants is None:
            dets = []
            for alphas in combinations(range(n_spatial), n_alpha):
                da = sum(1 << (2 * p) for p in alphas)
                for betas in combinations(range(n_spatial), n_beta):
                    dets.append(da + sum(1 << (2 * p + 1) for p in betas))
            dets.sort()
        else:
            dets = sorted(int(d) for d in determinants)
        self.determinants = np.array(dets, dtype=np.uint64)
        self._sig_tables = {}

    @classmethod
    def for_reference(cls, n_spatial, n_electrons):
        ref = reference_determinant(n_electrons)
        na, nb = occupation_counts(ref)
        return cls(n_spatial, na, nb)

    @classmethod
    def from_determinants(cls, n_spatial, determinants):
        na, nb = occupation_counts(int(determinants[0]))
        return cls(n_spatial, na, nb, determinants=determinants)

    @property
    def size(self):
        return len(self.determinants)

    @property
    def n_spin(self):
        return 2 * self.n_spatial

    @property
    def n_electrons(self):
        return self.n_alpha + self.n_beta

    def index_of(self, det: int) -> int:
        i = int(np.searchsorted(self.determinants, np.uint64(det)))
        if i >= self.size or int(self.determinants[i]) != det:
            raise KeyError(f"determinant {det:b} not in basis")
        return i

    def __contains__(self, det):
        i = int(np.searchsorted(self.determinants, np.uint64(det)))
        return i < self.size and int(self.determinants[i]) == int(det)

    def signature_table(self, sig: ExcitationSignature):
        """Cached (src, dst, phase) table for E_sig on this basis.

        The overall sign is fixed so that E_sig maps the closed-shell
        reference determinant to its target with phase +1.
        """
        tab = self._sig_tables.get(sig)
        if tab is None:
            src, dst, phase = excitation_table(
                self.determinants, list(sig.annihilated), list(sig.created))
            ref = reference_determinant(self.n_electrons)
            s = _reference_sign(sig, ref)
            tab = (src, dst, phase * s)
            self._sig_tables[sig] = tab
        return tab


def _reference_sign(sig, ref):
    """Sign making the raw operator string map the reference with +1."""
    phase = 1
    cur = ref
    for p in sorted(sig.annihilated):
        res = apply_annihilation(cur, p)
        if res is None:
            return 1  # signature does not touch the reference; keep raw phases
        cur, ph = res
        phase *= ph
    for p in sorted(sig.created, reverse=True):
        res = apply_creation(cur, p)
        if res is None:
            return 1
        cur, ph = res
        phase *= ph
    return phase


@dataclass
class WaveVector:
    """Dense coefficient vector over a SectorBasis."""

    basis: SectorBasis
    coefficients: np.ndarray

    @classmethod
    def unit(cls, basis, det):
        c = np.zeros(basis.size)
        c[basis.index_of(det)] = 1.0
        return cls(basis, c)

    @classmethod
    def reference(cls, basis):
        return cls.unit(basis, reference_determinant(basis.n_electrons))

    def norm(self):
        return float(np.linalg.norm(self.coefficients))

    def dot(self, other):
        return float(np.dot(self.coefficients, other.coefficients))

    def dump_csv(self, path):
        with open(path, "w") as fh:
            fh.write("determinant,coefficient\n")
            for d, c in zip(self.basis.determinants, self.coefficients):
                fh.write(f"{int(d):0{self.basis.n_spin}b},{c!r}\n")


def generator_matrix(basis: SectorBasis, pool_slice, antihermitian: bool):
    """Sparse matrix of sum_k theta_k E_k (or theta_k (E_k - E_k^T))."""
    rows, cols, vals = [], [], []
    for sig, theta in pool_slice:
        if theta == 0.0:
            continue
        src, dst, phase = basis.signature_table(sig)
        rows.append(dst)
        cols.append(src)
        vals.append(theta * phase)
        if antihermitian:
            rows.append(src)
            cols.append(dst)
            vals.append(-theta * phase)
    if not rows:
        return sp.csr_matrix((basis.size, basis.size))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.size, basis.size))


class GeneratorAssembler:
    """Reusable sparse-structure assembler for sum_k theta_k E_k (or the
    anti-Hermitian combination).

    The sparsity pattern over a fixed basis and signature list never
    changes; only the amplitudes do. Precomputing the CSR structure once
    makes per-iteration assembly a gather instead of a COO sort.
    """

    def __init__(self, basis: SectorBasis, signatures, antihermitian: bool):
        self.basis = basis
        self.signatures = list(signatures)
        self.antihermitian = antihermitian
        rows, cols, phases, sig_idx = [], [], [], []
        for k, sig in enumerate(self.signatures):
            src, dst, phase = basis.signature_table(sig)
            rows.append(dst)
            cols.append(src)
            phases.append(phase)
            sig_idx.append(np.full(src.size, k))
            if antihermitian:
                rows.append(src)
                cols.append(dst)
                phases.append(-phase)
                sig_idx.append(np.full(src.size, k))
        if rows:
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            self._phases = np.concatenate(phases)
            self._sig_idx = np.concatenate(sig_idx)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            self._phases = np.zeros(0)
            self._sig_idx = np.zeros(0, dtype=np.int64)
        # recover the CSR canonical ordering once; entries are unique
        # because a (source, target) pair determines the signature
        marker = sp.coo_matrix(
            (np.arange(rows.size, dtype=np.float64) + 1.0, (rows, cols)),
            shape=(basis.size, basis.size)).tocsr()
        if marker.nnz != rows.size:
            raise ValueError("duplicate matrix entries across signatures")
        self._perm = marker.data.astype(np.int64) - 1
        self._indices = marker.indices
        self._indptr = marker.indptr

    def matrix(self, amplitudes):
        """CSR matrix for the given amplitude vector (aligned with signatures)."""
        amplitudes = np.asarray(amplitudes, dtype=np.float64)
        data = (self._phases * amplitudes[self._sig_idx])[self._perm]
        return sp.csr_matrix((data, self._indices, self._indptr),
                             shape=(self.basis.size, self.basis.size))


def apply_generator(pool_slice, v: WaveVector, antihermitian: bool) -> WaveVector:
    """Linear action of the (anti-Hermitian or excitation-only) generator."""
    a = generator_matrix(v.basis, pool_slice, antihermitian)
    return WaveVector(v.basis, a @ v.coefficients)


def expm_taylor(a, x, nilpotent=False, tol=DEFAULT_EXPM_TOL,
                max_terms=MAX_EXPM_TERMS, max_rank=None):
    """y = expm(a) @ x by truncated Taylor series on a vector or block.

    nilpotent generators terminate exactly (the next term is checked to
    vanish); otherwise terms are added until their norm drops below tol.
    """
    y = x.copy()
    term = x.copy()
    if nilpotent:
        limit = max_rank if max_rank is not None else max_terms
        for k in range(1, limit + 1):
            term = a @ term / k
            if not np.any(term):
                return y
            y += term
        term = a @ term
        if np.any(term):
            raise ConvergenceError("excitation generator did not nilpotent-terminate")
        return y
    for k in range(1, max_terms + 1):
        term = a @ term / k
        y += term
        if np.linalg.norm(term) < tol:
            return y
    raise ConvergenceError(
        f"exponential series not converged in {max_terms} terms")


def expm_apply(pool_slice, v: WaveVector, antihermitian: bool,
               tol=DEFAULT_EXPM_TOL) -> WaveVector:
    """exp(generator) |v> via the Taylor series."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = generator_matrix(v.basis, pool_slice, antihermitian)
    y = expm_taylor(a, v.coefficients, nilpotent=not antihermitian,
                    tol=tol, max_rank=v.basis.n_electrons)
    return WaveVector(v.basis, y)


def sector_hamiltonian(h, basis: SectorBasis) -> np.ndarray:
    """Dense matrix of the spin-orbital Hamiltonian over the basis."""
    if basis.n_spatial != h.n_spatial:
        raise ValueError("basis/Hamiltonian dimension mismatch")
    return sector_hamiltonian_matrix(
        basis.determinants, basis.n_spin, h.h, h.v, h.core_energy)


def apply_hamiltonian(h, v: WaveVector) -> WaveVector:
    """Exact H|v> within the sector (dense matrix path, cached on the basis)."""
    cache = getattr(v.basis, "_ham_cache", None)
    if cache is None:
        cache = {}
        v.basis._ham_cache = cache
    key = id(h)
    mat = cache.get(key)
    if mat is None:
        mat = sector_hamiltonian(h, v.basis)
        cache.clear()  # keep at most one cached matrix per basis
        cache[key] = mat
    return WaveVector(v.basis, mat @ v.coefficients)
