"""Rank-truncated coupled cluster (CCSD/CCSDT/CCSDTQ) in determinant space.

The similarity-transformed Hamiltonian is evaluated exactly: T is
nilpotent, so e^{+-T}|v> are finite Taylor series within the sector.
Amplitudes are determinant-labeled (one per excited determinant), which
is equivalent to antisymmetrized spin-orbital amplitudes with a fixed
deduplication convention.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConvergenceError
from .fock import (ExcitationSignature, SectorBasis, GeneratorAssembler,
                   generator_matrix, expm_taylor, sector_hamiltonian,
                   reference_determinant)

__all__ = ["ClusterOperator", "enumerate_cluster_signatures",
           "cc_residual", "cc_solve"]

RESIDUAL_TOL = 1e-9
MAX_ITER = 200
DIIS_DEPTH = 8


def enumerate_cluster_signatures(n_spatial, n_electrons, max_rank):
    """All Sz-conserving excitations of the closed-shell reference up to
    max_rank, in a fixed deterministic order."""
    n_occ = n_electrons // 2
    occ_a = [2 * p for p in range(n_occ)]
    occ_b = [2 * p + 1 for p in range(n_occ)]
    vir_a = [2 * p for p in range(n_occ, n_spatial)]
    vir_b = [2 * p + 1 for p in range(n_occ, n_spatial)]
    sigs = []
    for rank in range(1, max_rank + 1):
        for ka in range(rank + 1):
            kb = rank - ka
            if ka > len(occ_a) or kb > len(occ_b):
                continue
            if ka > len(vir_a) or kb > len(vir_b):
                continue
            for ann_a in combinations(occ_a, ka):
                for ann_b in combinations(occ_b, kb):
                    for cre_a in combinations(vir_a, ka):
                        for cre_b in combinations(vir_b, kb):
                            sigs.append(ExcitationSignature(
                                ann_a + ann_b, cre_a + cre_b))
    sigs.sort(key=lambda s: (s.rank, s.annihilated, s.created))
    return sigs


@dataclass
class ClusterOperator:
    """Excitation-only cluster operator of bounded rank."""

    max_rank: int
    amplitudes: dict  # ExcitationSignature -> float, insertion-ordered

    def as_slice(self):
        return list(self.amplitudes.items())

    def vector(self):
        return np.array(list(self.amplitudes.values()))

    def with_vector(self, vec):
        return ClusterOperator(
            self.max_rank,
            dict(zip(self.amplitudes.keys(), (float(x) for x in vec))))


from .scf import spin_orbital_energies as _orbital_energies


def _transformed_reference(h_mat, t_mat, basis, n_electrons):
    ref = np.zeros(basis.size)
    ref[basis.index_of(reference_determinant(n_electrons))] = 1.0
    v = expm_taylor(t_mat, ref, nilpotent=True, max_rank=n_electrons)
    w = h_mat @ v
    return expm_taylor(-t_mat, w, nilpotent=True, max_rank=n_electrons)


def cc_residual(h, t: ClusterOperator, basis=None, h_mat=None):
    """Energy and projected residuals of e^{-T} H e^{T} |ref>."""
    if basis is None:
        basis = SectorBasis.for_reference(h.n_spatial, h.n_electrons)
    if h_mat is None:
        h_mat = sector_hamiltonian(h, basis)
    t_mat = generator_matrix(basis, t.as_slice(), antihermitian=False)
    z = _transformed_reference(h_mat, t_mat, basis, h.n_electrons)
    ref = reference_determinant(h.n_electrons)
    energy = float(z[basis.index_of(ref)])
    residual = {sig: float(z[basis.index_of(sig.target(ref))])
                for sig in t.amplitudes}
    return energy, residual


def cc_solve(h, max_rank, level_shift=0.0, tol=RESIDUAL_TOL,
             max_iter=MAX_ITER, basis=None, h_mat=None):
    """Solve the projected CC equations at the given truncation rank.

    Stage 1 is quasi-Newton iteration with DIIS; if that stalls (strong
    correlation makes the Jacobi iteration matrix nearly singular), a
    diagonally preconditioned Newton-Krylov polish finishes from the
    best iterate. Returns (energy, ClusterOperator, trace) with trace
    rows (iteration, energy, residual max-norm).
    """
    if not 1 <= max_rank <= h.n_electrons:
        raise ValueError("max_rank must be between 1 and n_electrons")
    if basis is None:
        basis = SectorBasis.for_reference(h.n_spatial, h.n_electrons)
    if h_mat is None:
        h_mat = sector_hamiltonian(h, basis)

    sigs = enumerate_cluster_signatures(h.n_spatial, h.n_electrons, max_rank)
    eps = _orbital_energies(h)
    denom = np.array([sum(eps[p] for p in s.annihilated)
                      - sum(eps[p] for p in s.created) for s in sigs])
    denom = denom - level_shift
    ref = reference_determinant(h.n_electrons)
    targets = np.array([basis.index_of(s.target(ref)) for s in sigs])
    ref_index = basis.index_of(ref)

    assembler = GeneratorAssembler(basis, sigs, antihermitian=False)

    def residual_vec(amp):
        z = _transformed_reference(h_mat, assembler.matrix(amp),
                                   basis, h.n_electrons)
        return float(z[ref_index]), z[targets]

    # MP2-like start: doubles from the bare Hamiltonian row, rest zero
    bare = h_mat[:, ref_index]
    amp = np.array([bare[targets[k]] / denom[k] if s.rank == 2 else 0.0
                    for k, s in enumerate(sigs)])

    trace = []
    amp_hist, err_hist = [], []
    best_amp, best_rnorm = amp.copy(), np.inf
    for it in range(1, max_iter + 1):
        energy, res = residual_vec(amp)
        rnorm = float(np.max(np.abs(res)))
        trace.append((it, energy, rnorm))
        if not np.isfinite(rnorm) or rnorm > 1e3:
            raise ConvergenceError(
                f"CC iteration diverged at step {it}", trace=trace)
        if rnorm < best_rnorm:
            best_amp, best_rnorm = amp.copy(), rnorm
        if rnorm < tol:
            op = ClusterOperator(max_rank, dict(zip(sigs, map(float, amp))))
            return energy, op, trace
        amp = amp - res / denom
        amp_hist.append(amp.copy())
        err_hist.append(res / denom)
        if len(amp_hist) > DIIS_DEPTH:
            amp_hist.pop(0)
            err_hist.pop(0)
        if len(amp_hist) > 1:
            m = len(amp_hist)
            b = np.empty((m + 1, m + 1))
            b[:m, :m] = np.array(
                [[np.dot(e1, e2) for e2 in err_hist] for e1 in err_hist])
            b[m, :m] = b[:m, m] = -1.0
            b[m, m] = 0.0
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                coef = np.linalg.solve(b, rhs)[:m]
                amp = np.sum([c * a for c, a in zip(coef, amp_hist)], axis=0)
            except np.linalg.LinAlgError:
                pass
        # stall detection: no order-of-magnitude progress over 40 steps
        if it >= 60 and trace[-1][2] > 0.5 * trace[-41][2]:
            break

    amp = _newton_krylov_polish(residual_vec, best_amp, denom, tol)
    energy, res = residual_vec(amp)
    rnorm = float(np.max(np.abs(res)))
    trace.append((len(trace) + 1, energy, rnorm))
    if rnorm < tol:
        op = ClusterOperator(max_rank, dict(zip(sigs, map(float, amp))))
        return energy, op, trace
    raise ConvergenceError(
        f"CC not converged (last residual {rnorm:.2e})", trace=trace)


def _newton_krylov_polish(residual_vec, amp0, denom, tol):
    """Preconditioned Newton-Krylov refinement of a near-converged iterate."""
    import scipy.optimize
    import scipy.sparse.linalg as spla

    m = len(amp0)
    precond = spla.LinearOperator((m, m), matvec=lambda x: x / denom)
    try:
        sol = scipy.optimize.root(
            lambda a: residual_vec(a)[1], amp0, method="krylov",
            options=dict(fatol=0.1 * tol, ftol=1e-30, maxiter=60,
                         jac_options=dict(inner_M=precond)))
        return sol.x
    except Exception:
        return amp0
