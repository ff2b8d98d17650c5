from fractions import Fraction

import numpy as np
from hypothesis import given, strategies as st

from hbforms.sparse import SignedSparseMatrix, hstack, kron, vstack

small = st.integers(-3, 3)


def mats(r, c):
    return st.lists(st.lists(small, min_size=c, max_size=c), min_size=r, max_size=r)


@given(mats(3, 4), mats(4, 2))
def test_matmul_matches_dense(a, b):
    A, B = SignedSparseMatrix.from_rows(a), SignedSparseMatrix.from_rows(b)
    assert np.array_equal((A @ B).to_dense(), np.array(a) @ np.array(b))


@given(mats(2, 3), mats(2, 2))
def test_kron_and_stacks(a, b):
    A, B = SignedSparseMatrix.from_rows(a), SignedSparseMatrix.from_rows(b)
    assert np.array_equal(kron(A, B).to_dense(), np.kron(a, b))
    assert np.array_equal(vstack([A, A]).to_dense(), np.vstack([a, a]))
    assert np.array_equal(hstack([A, A]).to_dense(), np.hstack([a, a]))


def test_fractions_and_mod_p():
    A = SignedSparseMatrix.from_rows([[Fraction(1, 2), 0], [0, -3]])
    assert A.T[0, 0] == Fraction(1, 2)
    assert A.nnz == 2
    m = A.mod_p(7)
    assert (m[0, 0] * 2) % 7 == 1 and m[1, 1] == 4
    assert (A + A.scale(-1)).is_zero()
