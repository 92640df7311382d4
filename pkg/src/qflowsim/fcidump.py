"""FCIDUMP interchange for spatial-orbital Hamiltonians.

Standard layout: a namelist header (NORB, NELEC, MS2, ORBSYM, ISYM)
followed by "value i j k l" lines with 1-based indices in the chemist
convention (ij|kl): two-electron entries first, then one-electron ones
(k = l = 0), then the core energy (all indices 0).
"""

import re

import numpy as np

from .errors import FcidumpParseError
from .scf import SpatialMOIntegrals

__all__ = ["fcidump_write", "fcidump_read"]

_WRITE_THRESHOLD = 1e-16


def fcidump_write(sp: SpatialMOIntegrals, path):
    """Write spatial MO integrals; unique entries under 8-fold symmetry."""
    if np.iscomplexobj(sp.h) or np.iscomplexobj(sp.eri):
        raise NotImplementedError("complex integrals are not supported")
    n = sp.n_orb
    with open(path, "w") as fh:
        fh.write(f"&FCI NORB={n},NELEC={sp.n_electrons},MS2=0,\n")
        fh.write("  ORBSYM=" + ",".join(["1"] * n) + ",\n")
        fh.write("  ISYM=1,\n")
        fh.write("&END\n")

        def emit(val, i, j, k, l):
            fh.write(f"{val: .16E} {i:4d} {j:4d} {k:4d} {l:4d}\n")

        for p in range(n):
            for q in range(p + 1):
                pq = p * (p + 1) // 2 + q
                for r in range(p + 1):
                    for s in range(r + 1):
                        rs = r * (r + 1) // 2 + s
                        if rs > pq:
                            continue
                        val = sp.eri[p, q, r, s]
                        if abs(val) > _WRITE_THRESHOLD:
                            emit(val, p + 1, q + 1, r + 1, s + 1)
        for p in range(n):
            for q in range(p + 1):
                val = sp.h[p, q]
                if abs(val) > _WRITE_THRESHOLD:
                    emit(val, p + 1, q + 1, 0, 0)
        emit(sp.core_energy, 0, 0, 0, 0)


def fcidump_read(path) -> SpatialMOIntegrals:
    """Parse an FCIDUMP file back into spatial MO integrals."""
    with open(path) as fh:
        text = fh.read()
    m = re.search(r"&FCI(.*?)(?:&END|/)", text, re.S | re.I)
    if not m:
        raise FcidumpParseError("missing &FCI ... &END header")
    header = m.group(1)

    def header_int(key):
        km = re.search(rf"{key}\s*=\s*(-?\d+)", header, re.I)
        if not km:
            raise FcidumpParseError(f"header field {key} missing")
        return int(km.group(1))

    norb = header_int("NORB")
    nelec = header_int("NELEC")
    if norb < 1:
        raise FcidumpParseError("NORB must be positive")

    h = np.zeros((norb, norb))
    eri = np.zeros((norb, norb, norb, norb))
    core = 0.0

    body_start = text.index(m.group(0)) + len(m.group(0))
    header_lines = text[:body_start].count("\n")
    for offset, line in enumerate(text[body_start:].splitlines()):
        lineno = header_lines + offset + 1
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FcidumpParseError(
                f"expected 'value i j k l', got {line!r}", lineno)
        if "(" in parts[0]:
            raise NotImplementedError("complex FCIDUMP values are not supported")
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError as ex:
            raise FcidumpParseError(str(ex), lineno) from None
        for idx in (i, j, k, l):
            if not 0 <= idx <= norb:
                raise FcidumpParseError(
                    f"orbital index {idx} out of range 0..{norb}", lineno)
        if i == 0:
            core = val
        elif k == 0:
            if j == 0:
                raise FcidumpParseError("one-electron entry needs two indices",
                                        lineno)
            h[i - 1, j - 1] = h[j - 1, i - 1] = val
        else:
            if j == 0 or l == 0:
                raise FcidumpParseError("two-electron entry needs four indices",
                                        lineno)
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r),
                               (q, p, s, r), (r, s, p, q), (s, r, p, q),
                               (r, s, q, p), (s, r, q, p)):
                eri[a, b, c, d] = val
    return SpatialMOIntegrals(norb, core, h, eri, nelec)
