"""Compare the compiled determinant kernels against the pure-Python
fallback on realistic workloads.

Usage: python benchmarks/bench_kernels.py [n_atoms] [spacing]
"""

import sys
import time

import numpy as np

from qflowsim import _kernels_py
from qflowsim.fock import SectorBasis
from qflowsim.molint import build_ao_integrals, chain_geometry
from qflowsim.scf import mo_transform, rhf_solve

try:
    from qflowsim import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def timed(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n_atoms = int(sys.argv[1]) if len(sys.argv) > 1 else 8
    spacing = float(sys.argv[2]) if len(sys.argv) > 2 else 2.0
    ao = build_ao_integrals(chain_geometry(n_atoms, spacing))
    scf = rhf_solve(ao, n_atoms)
    h = mo_transform(ao, scf)
    basis = SectorBasis.for_reference(h.n_spatial, h.n_electrons)
    print(f"H{n_atoms} chain at {spacing} bohr, sector dimension {basis.size}")

    backends = [("python", _kernels_py)]
    if _kernels_cy is not None:
        backends.append(("cython", _kernels_cy))
    else:
        print("compiled backend unavailable; benchmarking fallback only")

    results = {}
    for name, mod in backends:
        t_ham, mat = timed(lambda m=mod: m.sector_hamiltonian(
            basis.determinants, h.n_spin, h.h, h.v, h.core_energy))
        ann = list(range(4))
        cre = list(range(h.n_electrons, h.n_electrons + 4))
        t_tab, _ = timed(lambda m=mod: m.excitation_table(
            basis.determinants, ann, cre), repeat=20)
        results[name] = mat
        print(f"{name:>7}: sector_hamiltonian {t_ham * 1e3:9.1f} ms"
              f"   excitation_table {t_tab * 1e6:9.1f} us")

    if len(results) == 2:
        diff = np.max(np.abs(results["python"] - results["cython"]))
        print(f"max |python - cython| element difference: {diff:.3e}")


if __name__ == "__main__":
    main()
