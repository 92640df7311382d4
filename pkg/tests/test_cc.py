"""Rank-truncated coupled-cluster solver tests."""

import numpy as np
import pytest

from qflowsim.cc import (ClusterOperator, cc_residual, cc_solve,
                         enumerate_cluster_signatures)
from qflowsim.fock import reference_determinant
from qflowsim.spectra import exact_diag


def test_signature_enumeration_counts(h6_20):
    # H6: 3 occ x 3 virt spatials; singles 2*9 = 18 per spin channel
    sigs = enumerate_cluster_signatures(6, 6, 1)
    assert len(sigs) == 18
    sigs2 = enumerate_cluster_signatures(6, 6, 2)
    assert all(s.rank <= 2 for s in sigs2)
    assert all(s.delta_sz == 0 for s in sigs2)
    # deterministic ordering
    assert sigs2 == enumerate_cluster_signatures(6, 6, 2)


def test_zero_amplitudes_limit(h4_20):
    sigs = enumerate_cluster_signatures(4, 4, 2)
    t = ClusterOperator(2, {s: 0.0 for s in sigs})
    energy, res = cc_residual(h4_20.h, t, basis=h4_20.basis,
                              h_mat=h4_20.h_mat)
    assert energy == pytest.approx(h4_20.scf.e_hf, abs=1e-10)
    ref = reference_determinant(4)
    col = h4_20.h_mat[:, h4_20.basis.index_of(ref)]
    for sig, r in res.items():
        bare = col[h4_20.basis.index_of(sig.target(ref))]
        assert r == pytest.approx(bare, abs=1e-12)


def test_ccsd_exact_for_two_electrons(h2_14):
    e_cc, op, trace = cc_solve(h2_14.h, 2, basis=h2_14.basis,
                               h_mat=h2_14.h_mat)
    e_ed, _ = exact_diag(h2_14.h, h2_14.basis)
    assert e_cc == pytest.approx(e_ed, abs=1e-9)


def test_full_rank_equals_fci(h4_20):
    e_cc, op, trace = cc_solve(h4_20.h, 4, basis=h4_20.basis,
                               h_mat=h4_20.h_mat)
    e_ed, _ = exact_diag(h4_20.h, h4_20.basis)
    assert e_cc == pytest.approx(e_ed, abs=1e-8)


def test_full_rank_equals_fci_stretched(h4_30):
    e_cc, _, _ = cc_solve(h4_30.h, 4, basis=h4_30.basis, h_mat=h4_30.h_mat)
    e_ed, _ = exact_diag(h4_30.h, h4_30.basis)
    assert e_cc == pytest.approx(e_ed, abs=1e-8)


def test_h6_ccsd_value_and_residual(h6_20):
    e, op, trace = cc_solve(h6_20.h, 2, basis=h6_20.basis, h_mat=h6_20.h_mat)
    assert e == pytest.approx(-3.2173, abs=5e-4)
    _, res = cc_residual(h6_20.h, op, basis=h6_20.basis, h_mat=h6_20.h_mat)
    assert max(abs(v) for v in res.values()) < 1e-9
    # converged amplitudes round-trip through the vector interface
    assert np.array_equal(op.with_vector(op.vector()).vector(), op.vector())


def test_weak_correlation_ccsd_close_to_ed(h6_20):
    e, _, _ = cc_solve(h6_20.h, 2, basis=h6_20.basis, h_mat=h6_20.h_mat)
    e_ed, _ = exact_diag(h6_20.h, h6_20.basis)
    assert abs(e - e_ed) < 2e-3


def test_nonvariational_collapse(h6_30):
    """At stretched geometry CCSD falls below the exact energy."""
    e, _, _ = cc_solve(h6_30.h, 2, basis=h6_30.basis, h_mat=h6_30.h_mat)
    e_ed, _ = exact_diag(h6_30.h, h6_30.basis)
    assert e < e_ed


def test_invalid_rank(h4_20):
    with pytest.raises(ValueError):
        cc_solve(h4_20.h, 0)
    with pytest.raises(ValueError):
        cc_solve(h4_20.h, 5)


def test_trace_shape(h4_20):
    e, op, trace = cc_solve(h4_20.h, 2, basis=h4_20.basis, h_mat=h4_20.h_mat)
    assert all(len(row) == 3 for row in trace)
    iters = [it for it, _, _ in trace]
    assert iters == sorted(iters)
    assert trace[-1][2] < 1e-9
