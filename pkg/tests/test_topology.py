import numpy as np
import pytest
import scipy.sparse as sp
import sympy
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hbforms.sparse import SignedSparseMatrix
from hbforms.topology import (
    analyze,
    boundary_loops,
    cellset_complex,
    cohomology_dims,
    exact_rank,
    h1_generators,
    pinches,
    rank_mod_p,
)


def ring(n=5, hole=1):
    m = np.ones((n, n), bool)
    m[hole : n - hole, hole : n - hole] = False
    return m


def test_rectangle():
    t = analyze(np.ones((3, 4), bool))
    assert t.betti == (1, 0) and t.euler == 1 and t.manifold


def test_ring_has_one_hole():
    assert analyze(ring()).betti == (1, 1)
    assert boundary_loops(ring()) == 2


def test_corner_pinch_is_two_components():
    m = np.array([[1, 0], [0, 1]], bool)
    t = analyze(m)
    assert t.betti == (2, 0) and not t.manifold
    assert pinches(m).sum() == 1


def test_pinched_ring_counts_no_hole():
    # four arms meeting only at corners around a missing centre
    m = np.zeros((3, 3), bool)
    m[0, 1] = m[1, 0] = m[1, 2] = m[2, 1] = True
    assert analyze(m).betti == (4, 0)


def test_empty_set():
    t = analyze(np.zeros((3, 3), bool))
    assert t.betti == (0, 0)


masks = arrays(bool, st.tuples(st.integers(1, 7), st.integers(1, 7)))


@given(masks)
def test_transpose_invariance(m):
    assert analyze(m).betti == analyze(m.T).betti


@given(masks)
def test_euler_matches_loop_count_on_manifolds(m):
    t = analyze(m)
    if t.manifold:
        # each component has one outer loop and one loop per hole
        assert boundary_loops(m) == t.components + t.holes


def _dense_rank(M):
    return sympy.Matrix(M.to_dense().astype(int).tolist()).rank()


@given(arrays(bool, st.tuples(st.integers(1, 5), st.integers(1, 5))))
@settings(max_examples=20)
def test_cohomology_matches_rational_rank(m):
    D0, D1 = cellset_complex(m)
    n0, n1, n2 = D0.shape[1], D0.shape[0], D1.shape[0]
    r0 = _dense_rank(D0) if D0.nnz else 0
    r1 = _dense_rank(D1) if D1.nnz else 0
    assert cohomology_dims(D0, D1) == (n0 - r0, n1 - r0 - r1, n2 - r1)


@given(arrays(bool, st.tuples(st.integers(1, 6), st.integers(1, 6))))
@settings(max_examples=20)
def test_subgrid_cohomology_is_dual_to_betti(m):
    # interior-entity complex of a cell set: h1 = holes, h2 = components
    t = analyze(m)
    if not t.manifold:
        return
    D0, D1 = cellset_complex(m)
    h0, h1, h2 = cohomology_dims(D0, D1)
    assert (h0, h1, h2) == (0, t.holes, t.components)


def test_h1_generators_ring():
    m = ring(6, 2)
    gens = h1_generators(m)
    D0, D1 = cellset_complex(m)
    assert len(gens) == 1
    g = gens[0]
    assert not (D1.to_scipy() @ g).any()
    # not exact: g outside range(D0)
    A = np.column_stack([D0.to_dense(), g])
    assert np.linalg.matrix_rank(A) == np.linalg.matrix_rank(D0.to_dense()) + 1


def test_h1_generators_two_rings():
    a = np.ones((5, 9), bool)
    a[2, 2] = a[2, 6] = False
    gens = h1_generators(a)
    assert analyze(a).holes == 2 and len(gens) == 2
    D0, _ = cellset_complex(a)
    A = np.column_stack([D0.to_dense(), *gens])
    assert np.linalg.matrix_rank(A) == np.linalg.matrix_rank(D0.to_dense()) + 2


def test_empty_complex_cohomology():
    # one vertex, no edges, one cell
    D0 = SignedSparseMatrix.from_scipy(sp.csr_matrix((0, 1), dtype=np.int64))
    D1 = SignedSparseMatrix.from_scipy(sp.csr_matrix((1, 0), dtype=np.int64))
    assert cohomology_dims(D0, D1) == (1, 0, 1)


def test_rank_mod_p_small():
    A = np.array([[1, 2], [2, 4]])
    assert rank_mod_p(A, 7) == 1
    assert rank_mod_p(np.array([[3, 0], [0, 7]]), 7) == 1
    assert rank_mod_p(np.eye(3, dtype=int), 101) == 3


def test_exact_rank_zero_matrix():
    assert exact_rank(SignedSparseMatrix.from_scipy(sp.csr_matrix((3, 4), dtype=np.int64))) == 0


def test_noncomposable_rejected():
    a = SignedSparseMatrix.from_scipy(sp.csr_matrix(np.ones((2, 3), dtype=np.int64)))
    with pytest.raises(ValueError):
        cohomology_dims(a, a)
