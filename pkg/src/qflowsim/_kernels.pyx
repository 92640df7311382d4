# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled determinant-space kernels (Slater-Condon matrix build and
excitation action tables). Mirrors the API of _kernels_py."""

import numpy as np
cimport numpy as cnp
cimport cython
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"


cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    #define POPCOUNT64(x) __builtin_popcountll(x)
    #else
    static int POPCOUNT64(unsigned long long x) {
        int c = 0;
        while (x) { x &= x - 1; c++; }
        return c;
    }
    #endif
    """
    int POPCOUNT64(uint64_t x) nogil


cdef inline int64_t _bisect(const uint64_t* dets, int64_t n, uint64_t key) nogil:
    cdef int64_t lo = 0, hi = n - 1, mid
    while lo <= hi:
        mid = (lo + hi) >> 1
        if dets[mid] < key:
            lo = mid + 1
        elif dets[mid] > key:
            hi = mid - 1
        else:
            return mid
    return -1


cdef inline double _apply_string(uint64_t* det, const int* orbs,
                                 const int* create, int nops) nogil:
    """Apply the operator string in ket order; returns the phase, or 0 if
    Pauli-forbidden. det is updated in place."""
    cdef double phase = 1.0
    cdef int k, p
    cdef uint64_t bit, below
    for k in range(nops):
        p = orbs[k]
        bit = (<uint64_t>1) << p
        below = bit - 1
        if create[k]:
            if det[0] & bit:
                return 0.0
            if POPCOUNT64(det[0] & below) & 1:
                phase = -phase
            det[0] |= bit
        else:
            if not (det[0] & bit):
                return 0.0
            if POPCOUNT64(det[0] & below) & 1:
                phase = -phase
            det[0] ^= bit
    return phase


def excitation_table(cnp.ndarray[cnp.uint64_t, ndim=1] dets,
                     annihilated, created):
    """Same contract as _kernels_py.excitation_table."""
    cdef int64_t n = dets.shape[0]
    cdef int nops = len(annihilated) + len(created)
    cdef int[64] orbs
    cdef int[64] cre
    cdef int k = 0
    for p in sorted(annihilated):
        orbs[k] = p; cre[k] = 0; k += 1
    for p in sorted(created, reverse=True):
        orbs[k] = p; cre[k] = 1; k += 1

    src_buf = np.empty(n, dtype=np.int64)
    dst_buf = np.empty(n, dtype=np.int64)
    ph_buf = np.empty(n, dtype=np.float64)
    cdef int64_t[:] src = src_buf
    cdef int64_t[:] dst = dst_buf
    cdef double[:] ph = ph_buf
    cdef const uint64_t[:] dv = dets
    cdef int64_t i, j, m = 0
    cdef uint64_t d
    cdef double phase
    for i in range(n):
        d = dv[i]
        phase = _apply_string(&d, orbs, cre, nops)
        if phase == 0.0:
            continue
        j = _bisect(&dv[0], n, d)
        if j < 0:
            raise ValueError("excitation leaves the determinant basis")
        src[m] = i
        dst[m] = j
        ph[m] = phase
        m += 1
    return src_buf[:m].copy(), dst_buf[:m].copy(), ph_buf[:m].copy()


def sector_hamiltonian(cnp.ndarray[cnp.uint64_t, ndim=1] dets, int n_spin,
                       cnp.ndarray[cnp.float64_t, ndim=2] h1,
                       cnp.ndarray[cnp.float64_t, ndim=4] v,
                       double core):
    """Same contract as _kernels_py.sector_hamiltonian."""
    cdef int64_t n = dets.shape[0]
    ham_buf = np.zeros((n, n), dtype=np.float64)
    cdef double[:, :] ham = ham_buf
    cdef const uint64_t[:] dv = dets
    cdef double[:, :] h = h1
    cdef double[:, :, :, :] vv = v

    cdef int[64] occ
    cdef int[64] vir
    cdef int nocc, nvir
    cdef int64_t col, row
    cdef int p, q, i, j, a, b, ii, jj, aa, bb
    cdef uint64_t d, dnew, bit
    cdef double diag, el, phase
    cdef int[4] orbs
    cdef int[4] cre

    with nogil:
        for col in range(n):
            d = dv[col]
            nocc = 0
            nvir = 0
            for p in range(n_spin):
                if d & ((<uint64_t>1) << p):
                    occ[nocc] = p; nocc += 1
                else:
                    vir[nvir] = p; nvir += 1

            # diagonal
            diag = core
            for ii in range(nocc):
                p = occ[ii]
                diag += h[p, p]
                for jj in range(nocc):
                    q = occ[jj]
                    diag += 0.5 * vv[p, q, p, q]
            ham[col, col] = diag

            # singles
            for ii in range(nocc):
                i = occ[ii]
                for aa in range(nvir):
                    a = vir[aa]
                    if (a - i) % 2 != 0:
                        continue
                    el = h[a, i]
                    for jj in range(nocc):
                        q = occ[jj]
                        el += vv[a, q, i, q]
                    dnew = d
                    orbs[0] = i; cre[0] = 0
                    orbs[1] = a; cre[1] = 1
                    phase = _apply_string(&dnew, orbs, cre, 2)
                    row = _bisect(&dv[0], n, dnew)
                    if row >= 0:  # absent rows are projected out (CAS bases)
                        ham[row, col] = phase * el

            # doubles: i<j annihilated, a<b created, Sz conserved
            for ii in range(nocc):
                i = occ[ii]
                for jj in range(ii + 1, nocc):
                    j = occ[jj]
                    for aa in range(nvir):
                        a = vir[aa]
                        for bb in range(aa + 1, nvir):
                            b = vir[bb]
                            if (a % 2) + (b % 2) != (i % 2) + (j % 2):
                                continue
                            el = vv[a, b, i, j]
                            if el == 0.0:
                                continue
                            dnew = d
                            orbs[0] = i; cre[0] = 0
                            orbs[1] = j; cre[1] = 0
                            orbs[2] = b; cre[2] = 1
                            orbs[3] = a; cre[3] = 1
                            phase = _apply_string(&dnew, orbs, cre, 4)
                            row = _bisect(&dv[0], n, dnew)
                            if row >= 0:
                                ham[row, col] = phase * el
    return ham_buf
