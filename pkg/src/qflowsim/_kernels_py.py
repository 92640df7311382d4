"""Pure-numpy fallback kernels for determinant-space hot loops.

Vectorized over determinants for each excitation pattern, so the cost
scales with (number of patterns) x (vector ops on the sector), which is
adequate up to a few thousand determinants. The compiled extension in
_kernels.pyx implements the same two entry points.
"""

import numpy as np

BACKEND = "python"


def _phase_sequence(cur, orbitals, create_flags):
    """Stepwise fermionic phases for a fixed orbital sequence.

    cur: uint64 array of determinants (modified copy), orbitals/flags:
    the operator string applied left-to-right in ket order.
    Returns (phase array, final determinants).
    """
    cur = cur.copy()
    phase = np.ones(cur.shape, dtype=np.float64)
    for p, create in zip(orbitals, create_flags):
        below = np.uint64((1 << p) - 1)
        bit = np.uint64(1 << p)
        par = np.bitwise_count(cur & below) & np.uint64(1)
        phase *= 1.0 - 2.0 * par.astype(np.float64)
        cur = cur ^ bit if not create else cur | bit
    return phase, cur


def _operator_order(annihilated, created):
    """Ket-order application sequence: annihilations ascending, creations descending."""
    seq = [(p, False) for p in sorted(annihilated)]
    seq += [(p, True) for p in sorted(created, reverse=True)]
    orbs = [p for p, _ in seq]
    flags = [c for _, c in seq]
    return orbs, flags


def excitation_table(dets, annihilated, created):
    """Action table of the excitation string on a sorted determinant array.

    Returns (src, dst, phase) index arrays: the normal-ordered string
    a+_{created} a_{annihilated} maps dets[src] -> dets[dst] with the
    given fermionic phase. Determinants where the string is
    Pauli-forbidden are skipped; target determinants must be present in
    `dets`.
    """
    dets = np.asarray(dets, dtype=np.uint64)
    ann_mask = np.uint64(sum(1 << p for p in annihilated))
    cre_mask = np.uint64(sum(1 << p for p in created))
    ok = ((dets & ann_mask) == ann_mask) & ((dets & cre_mask) == 0)
    src = np.nonzero(ok)[0]
    if src.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    orbs, flags = _operator_order(annihilated, created)
    phase, out = _phase_sequence(dets[src], orbs, flags)
    dst = np.searchsorted(dets, out)
    if np.any(dst >= dets.size) or np.any(dets[np.minimum(dst, dets.size - 1)] != out):
        raise ValueError("excitation leaves the determinant basis")
    return src.astype(np.int64), dst.astype(np.int64), phase


def _lookup(dets, targets):
    """searchsorted with a mask of targets actually present in dets."""
    dst = np.searchsorted(dets, targets)
    dst = np.minimum(dst, dets.size - 1)
    found = dets[dst] == targets
    return dst, found


def sector_hamiltonian(dets, n_spin, h1, v, core):
    """Dense Hamiltonian matrix over a sorted determinant basis.

    h1: one-body spin-orbital matrix; v: antisymmetrized <pq||rs>;
    core: scalar shift. Slater-Condon evaluation vectorized per
    excitation pattern.
    """
    dets = np.asarray(dets, dtype=np.uint64)
    n = dets.size
    occ = ((dets[:, None] >> np.arange(n_spin, dtype=np.uint64)[None, :])
           & np.uint64(1)).astype(np.float64)
    ham = np.zeros((n, n))

    # diagonal
    vdiag = np.einsum("pqpq->pq", v)
    diag = core + occ @ np.diag(h1) + 0.5 * np.einsum(
        "dp,pq,dq->d", occ, vdiag, occ, optimize=True)
    ham[np.arange(n), np.arange(n)] = diag

    # singles i -> a (same spin)
    for i in range(n_spin):
        for a in range(n_spin):
            if a == i or (a - i) % 2 != 0:
                continue
            sel = np.nonzero((occ[:, i] == 1.0) & (occ[:, a] == 0.0))[0]
            if sel.size == 0:
                continue
            orbs, flags = _operator_order([i], [a])
            phase, out = _phase_sequence(dets[sel], orbs, flags)
            dst, found = _lookup(dets, out)
            w = np.einsum("kk->k", v[a, :, i, :]).copy()
            val = h1[a, i] + occ[sel] @ w
            ham[dst[found], sel[found]] = (phase * val)[found]

    # doubles (i<j) -> (a<b), Sz conserving
    for i in range(n_spin):
        for j in range(i + 1, n_spin):
            sz_ann = (i % 2) + (j % 2)
            for a in range(n_spin):
                if a in (i, j):
                    continue
                for b in range(a + 1, n_spin):
                    if b in (i, j):
                        continue
                    if (a % 2) + (b % 2) != sz_ann:
                        continue
                    el = v[a, b, i, j]
                    if el == 0.0:
                        continue
                    sel = np.nonzero((occ[:, i] == 1.0) & (occ[:, j] == 1.0)
                                     & (occ[:, a] == 0.0) & (occ[:, b] == 0.0))[0]
                    if sel.size == 0:
                        continue
                    orbs, flags = _operator_order([i, j], [a, b])
                    phase, out = _phase_sequence(dets[sel], orbs, flags)
                    dst, found = _lookup(dets, out)
                    ham[dst[found], sel[found]] = phase[found] * el
    return ham
