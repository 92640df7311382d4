"""Determinant engine tests: operators, phases, exponentials."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflowsim.fock import (ExcitationSignature, SectorBasis, WaveVector,
                           apply_creation, apply_annihilation,
                           apply_generator, apply_hamiltonian, expm_apply,
                           generator_matrix, occupation_counts,
                           reference_determinant, sector_hamiltonian,
                           GeneratorAssembler, expm_taylor)

EXPM_TOL = 1e-12


def test_creation_annihilation_basics():
    assert apply_creation(0, 0) == (1, 1)
    assert apply_creation(1, 0) is None
    assert apply_annihilation(0b11, 1) == (0b01, -1)
    assert apply_annihilation(0b01, 1) is None
    # phase counts the set bits below the index
    assert apply_creation(0b0101, 1) == (0b0111, -1)
    assert apply_creation(0b0101, 3) == (0b1101, 1)


def test_creation_annihilation_adjoint():
    """a_p then a+_p restores the determinant with phase product +1."""
    for det in range(16):
        for p in range(4):
            res = apply_annihilation(det, p)
            if res is None:
                continue
            det2, ph = res
            det3, ph2 = apply_creation(det2, p)
            assert det3 == det and ph * ph2 == 1


def test_reference_determinant():
    assert reference_determinant(6) == 0b111111
    assert occupation_counts(reference_determinant(6)) == (3, 3)


def test_signature_validation():
    with pytest.raises(ValueError):
        ExcitationSignature((0,), (1, 2))
    with pytest.raises(ValueError):
        ExcitationSignature((0, 1), (1, 2))
    sig = ExcitationSignature((2, 0), (5, 4))
    assert sig.annihilated == (0, 2) and sig.created == (4, 5)
    assert sig.rank == 2


def test_signature_target():
    ref = reference_determinant(4)
    sig = ExcitationSignature((0,), (4,))
    assert sig.target(ref) == (ref ^ 1) | 16
    assert sig.target(ref ^ 1) is None       # source hole absent
    assert sig.target(ref | 16) is None      # target occupied


def test_sector_basis_counts():
    basis = SectorBasis.for_reference(4, 4)
    assert basis.size == 36  # C(4,2)^2
    ref = reference_determinant(4)
    assert ref in basis
    assert basis.determinants[basis.index_of(ref)] == ref
    with pytest.raises(KeyError):
        basis.index_of(0b1)


def _brute_force_operator(basis, sig, antihermitian):
    """Explicit operator matrix from elementary creations/annihilations."""
    n = basis.size
    mat = np.zeros((n, n))
    from qflowsim.fock import _reference_sign
    s = _reference_sign(sig, reference_determinant(basis.n_electrons))
    for col, det in enumerate(basis.determinants):
        cur, phase = int(det), s
        ok = True
        for p in sorted(sig.annihilated):
            res = apply_annihilation(cur, p)
            if res is None:
                ok = False
                break
            cur, ph = res
            phase *= ph
        if ok:
            for p in sorted(sig.created, reverse=True):
                res = apply_creation(cur, p)
                if res is None:
                    ok = False
                    break
                cur, ph = res
                phase *= ph
        if ok:
            mat[basis.index_of(cur), col] += phase
    return mat - mat.T if antihermitian else mat


def test_generator_matrix_vs_brute_force(rng):
    basis = SectorBasis.for_reference(4, 4)
    sigs = [ExcitationSignature((0,), (4,)),
            ExcitationSignature((1, 2), (5, 6)),
            ExcitationSignature((0, 1), (4, 5)),
            ExcitationSignature((0, 1, 2, 3), (4, 5, 6, 7))]
    theta = rng.standard_normal(len(sigs))
    for anti in (False, True):
        got = generator_matrix(basis, list(zip(sigs, theta)), anti).toarray()
        want = sum(t * _brute_force_operator(basis, s, anti)
                   for s, t in zip(sigs, theta))
        assert np.allclose(got, want, atol=1e-14)


def test_assembler_matches_generator_matrix(rng):
    basis = SectorBasis.for_reference(4, 4)
    sigs = [ExcitationSignature((0,), (4,)),
            ExcitationSignature((0, 1), (4, 5)),
            ExcitationSignature((2, 3), (6, 7))]
    asm = GeneratorAssembler(basis, sigs, antihermitian=True)
    for _ in range(3):
        theta = rng.standard_normal(len(sigs))
        a = asm.matrix(theta).toarray()
        b = generator_matrix(basis, list(zip(sigs, theta)), True).toarray()
        assert np.allclose(a, b, atol=1e-15)


def test_signature_maps_reference_with_plus_one():
    basis = SectorBasis.for_reference(4, 4)
    ref = reference_determinant(4)
    for sig in (ExcitationSignature((0,), (4,)),
                ExcitationSignature((1, 2), (5, 6)),
                ExcitationSignature((0, 3), (4, 7)),
                ExcitationSignature((0, 1, 2), (4, 5, 6))):
        v = apply_generator([(sig, 1.0)], WaveVector.reference(basis), False)
        assert v.coefficients[basis.index_of(sig.target(ref))] == 1.0
        assert np.count_nonzero(v.coefficients) >= 1


def test_empty_generator():
    basis = SectorBasis.for_reference(4, 4)
    v = apply_generator([], WaveVector.reference(basis), True)
    assert not np.any(v.coefficients)


def test_givens_rotation():
    """One anti-Hermitian signature rotates in a two-level subspace."""
    basis = SectorBasis.for_reference(4, 4)
    ref = reference_determinant(4)
    sig = ExcitationSignature((0, 1), (4, 5))
    theta = 0.37
    v = expm_apply([(sig, theta)], WaveVector.reference(basis), True)
    i0 = basis.index_of(ref)
    i1 = basis.index_of(sig.target(ref))
    assert v.coefficients[i0] == pytest.approx(math.cos(theta), abs=1e-12)
    assert v.coefficients[i1] == pytest.approx(math.sin(theta), abs=1e-12)
    mask = np.ones(basis.size, bool)
    mask[[i0, i1]] = False
    assert np.max(np.abs(v.coefficients[mask])) < 1e-12


def test_expm_zero_is_identity(rng):
    basis = SectorBasis.for_reference(4, 4)
    x = rng.standard_normal(basis.size)
    v = expm_apply([], WaveVector(basis, x.copy()), True)
    assert np.array_equal(v.coefficients, x)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_unitarity(seed):
    rng = np.random.default_rng(seed)
    basis = SectorBasis.for_reference(4, 4)
    sigs = [ExcitationSignature((0,), (4,)),
            ExcitationSignature((0, 1), (4, 5)),
            ExcitationSignature((1, 2), (5, 6))]
    theta = rng.standard_normal(3)
    u = rng.standard_normal(basis.size)
    w = rng.standard_normal(basis.size)
    pool = list(zip(sigs, theta))
    eu = expm_apply(pool, WaveVector(basis, u), True, tol=EXPM_TOL)
    ew = expm_apply(pool, WaveVector(basis, w), True, tol=EXPM_TOL)
    assert eu.dot(ew) == pytest.approx(float(u @ w), abs=10 * EXPM_TOL
                                       * max(1.0, np.linalg.norm(u)
                                             * np.linalg.norm(w)))


def test_expm_inverse(rng):
    basis = SectorBasis.for_reference(4, 4)
    sigs = [ExcitationSignature((0, 1), (4, 5)),
            ExcitationSignature((2, 3), (6, 7))]
    theta = rng.standard_normal(2)
    x = rng.standard_normal(basis.size)
    pool = list(zip(sigs, theta))
    y = expm_apply(pool, WaveVector(basis, x), True, tol=EXPM_TOL)
    z = expm_apply([(s, -t) for s, t in pool], y, True, tol=EXPM_TOL)
    assert np.allclose(z.coefficients, x, atol=20 * EXPM_TOL)


def test_nilpotent_termination(rng):
    """Excitation-only series must terminate with an exactly zero tail."""
    basis = SectorBasis.for_reference(4, 4)
    sigs = [ExcitationSignature((0, 1), (4, 5)),
            ExcitationSignature((2, 3), (6, 7))]
    a = generator_matrix(basis, list(zip(sigs, rng.standard_normal(2))),
                         False)
    dense = a.toarray()
    # rank strictly increases: the (n_electrons+1)-th power vanishes
    assert not np.any(np.linalg.matrix_power(dense, 5))
    x = rng.standard_normal(basis.size)
    y = expm_taylor(a, x, nilpotent=True, max_rank=4)
    assert np.all(np.isfinite(y))


def test_sector_leakage(h4_20):
    """H and generators keep vectors inside the (n_alpha, n_beta) sector."""
    basis = h4_20.basis
    mat = h4_20.h_mat
    for col, det in enumerate(basis.determinants):
        rows = np.nonzero(mat[:, col])[0]
        for r in rows:
            assert occupation_counts(int(basis.determinants[r])) == \
                occupation_counts(int(det))


def test_hamiltonian_2orbital_brute_force():
    """Dense sector matrix against hand-evaluated Slater-Condon elements
    on a 2-orbital, 2-electron system."""
    from qflowsim.scf import MOHamiltonian, SpatialMOIntegrals
    n = 2
    h1 = np.array([[-1.2, 0.1], [0.1, -0.4]])
    eri = np.zeros((n, n, n, n))
    vals = {(0, 0, 0, 0): 0.60, (1, 1, 1, 1): 0.55, (0, 0, 1, 1): 0.45,
            (0, 1, 0, 1): 0.12, (0, 0, 0, 1): 0.05, (1, 1, 0, 1): 0.03}
    for (p, q, r, s), v in vals.items():
        for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r),
                           (q, p, s, r), (r, s, p, q), (s, r, p, q),
                           (r, s, q, p), (s, r, q, p)):
            eri[a, b, c, d] = v
    sp = SpatialMOIntegrals(n, 0.3, h1, eri, 2)
    h = MOHamiltonian.from_spatial(sp)
    basis = SectorBasis.for_reference(n, 2)
    mat = sector_hamiltonian(h, basis)
    assert np.allclose(mat, mat.T, atol=1e-13)

    # brute force from the second-quantized definition
    def column(det):
        out = np.zeros(basis.size)
        for p in range(2 * n):
            for q in range(2 * n):
                res = apply_annihilation(int(det), q)
                if res is None:
                    continue
                d1, ph1 = res
                res = apply_creation(d1, p)
                if res is None:
                    continue
                d2, ph2 = res
                if d2 in basis:
                    out[basis.index_of(d2)] += h.h[p, q] * ph1 * ph2
        for p in range(2 * n):
            for q in range(2 * n):
                for r in range(2 * n):
                    for s in range(2 * n):
                        cur, phase = int(det), 1
                        ok = True
                        for op, create in ((r, False), (s, False),
                                           (q, True), (p, True)):
                            res = (apply_creation if create
                                   else apply_annihilation)(cur, op)
                            if res is None:
                                ok = False
                                break
                            cur, ph = res
                            phase *= ph
                        if ok and cur in basis:
                            out[basis.index_of(cur)] += \
                                0.25 * h.v[p, q, r, s] * phase
        out[basis.index_of(int(det))] += h.core_energy
        return out

    brute = np.column_stack([column(d) for d in basis.determinants])
    assert np.allclose(mat, brute, atol=1e-12)


def test_wavevector_dump(tmp_path, h4_20):
    v = WaveVector.reference(h4_20.basis)
    path = tmp_path / "vec.csv"
    v.dump_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "determinant,coefficient"
    assert len(lines) == h4_20.basis.size + 1
