import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iwasawa.errors import DimensionBudgetExceeded
from iwasawa.fplin import (
    FpMatrix,
    cokernel_dim,
    cokernel_length,
    coinvariant_dim,
    fixed_space_dim,
    mult_matrix,
    rank_mod_p,
)


def image_size(A: np.ndarray, modulus: int) -> int:
    """Number of distinct vectors A v, v over (Z/modulus)^cols."""
    rows, cols = A.shape
    seen = set()
    for v in itertools.product(range(modulus), repeat=cols):
        seen.add(tuple((A @ np.array(v, dtype=np.int64)) % modulus) if cols else (0,) * rows)
    return len(seen)


def small_matrix(modulus, max_rows=4, max_cols=4):
    return st.tuples(st.integers(1, max_rows), st.integers(0, max_cols)).flatmap(
        lambda rc: st.lists(st.integers(0, modulus - 1), min_size=rc[0] * rc[1], max_size=rc[0] * rc[1]).map(
            lambda xs: np.array(xs, dtype=np.int64).reshape(rc)
        )
    )


@given(small_matrix(3))
def test_rank_against_image_count(A):
    assert 3 ** rank_mod_p(A, 3) == image_size(A, 3)


@given(small_matrix(5, 5, 5))
def test_rank_of_transpose(A):
    assert rank_mod_p(A, 5) == rank_mod_p(A.T, 5)


@given(small_matrix(3, 4, 3), st.integers(2, 3))
def test_cokernel_length_against_image_count(A, k):
    m = 3**k
    assert cokernel_length(A, 3, k) == A.shape[0] * k - round(math.log(image_size(A % m, m), 3))


@given(small_matrix(5, 5, 5))
def test_length_at_k1_is_cokernel_dim(A):
    assert cokernel_length(A, 5, 1) == cokernel_dim(FpMatrix(5, A))


def test_rank_examples():
    assert rank_mod_p(np.array([[1, 2], [2, 4]]), 3) == 1
    assert rank_mod_p(np.array([[3, 0], [0, 3]]), 3) == 0
    assert rank_mod_p(np.zeros((0, 3), dtype=np.int64), 3) == 0


def test_rank_does_not_mutate():
    A = np.array([[1, 2], [3, 4]])
    rank_mod_p(A, 5)
    assert A.tolist() == [[1, 2], [3, 4]]


@given(small_matrix(3, 5, 5), st.randoms(use_true_random=False))
def test_rank_invariant_under_permutation_and_scaling(A, rnd):
    rows, cols = A.shape
    pr, pc = list(range(rows)), list(range(cols))
    rnd.shuffle(pr)
    rnd.shuffle(pc)
    scale = np.array([rnd.choice([1, 2]) for _ in range(rows)])
    B = (A[pr][:, pc] * scale[:, None]) % 3
    assert rank_mod_p(A, 3) == rank_mod_p(B, 3)


@given(small_matrix(3), small_matrix(3))
def test_block_diagonal_additivity(A, B):
    D = np.zeros((A.shape[0] + B.shape[0], A.shape[1] + B.shape[1]), dtype=np.int64)
    D[: A.shape[0], : A.shape[1]] = A
    D[A.shape[0]:, A.shape[1]:] = B
    assert rank_mod_p(D, 3) == rank_mod_p(A, 3) + rank_mod_p(B, 3)


def test_cokernel_length_smith_example():
    # diag(1, 3, 9) over Z/27: cokernel Z/3 + Z/9 has length 3
    assert cokernel_length(np.diag([1, 3, 9]), 3, 3) == 3
    assert cokernel_length(np.zeros((2, 0), dtype=np.int64), 3, 2) == 4


class TestMultMatrix:
    def test_shape_and_toeplitz(self):
        T = mult_matrix([1, 2], 3, 1)
        assert T.entries.tolist() == [[1, 0, 0], [2, 1, 0], [0, 2, 1]]

    def test_quotient_by_distinguished(self):
        # F = X^2 + 3 reduces to X^2: coker on F_3[X]/X^9 has dim 2
        assert cokernel_dim(mult_matrix([3, 0, 1], 3, 2)) == 2

    def test_budget(self):
        with pytest.raises(DimensionBudgetExceeded):
            mult_matrix([1], 3, 5, budget=100)


class TestFpMatrix:
    def test_immutable_and_reduced(self):
        M = FpMatrix(3, [[4, 5]])
        assert M.entries.tolist() == [[1, 2]]
        with pytest.raises(ValueError):
            M.entries[0, 0] = 0

    def test_eq_hash(self):
        assert FpMatrix(3, [[1]]) == FpMatrix(3, [[4]])
        assert hash(FpMatrix(3, [[1]])) == hash(FpMatrix(3, [[4]]))
        assert FpMatrix.identity(3, 2).rank() == 2
        assert FpMatrix.zeros(3, 2, 3).T.rows == 3


def test_fixed_space_of_unipotent_shift():
    # multiplication by 1+X on F_3[X]/X^4 fixes only multiples of X^3
    T = mult_matrix([1, 1], 3, 0)
    T4 = FpMatrix(3, np.eye(4, dtype=np.int64) + np.eye(4, k=-1, dtype=np.int64))
    assert fixed_space_dim(T4) == 1
    assert coinvariant_dim(T4) == 1
    assert fixed_space_dim(FpMatrix.identity(3, 4)) == 4
    assert T.rows == 1
