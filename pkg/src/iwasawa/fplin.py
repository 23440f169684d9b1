"""Dense linear algebra over F_p (and Z/p^k) for coinvariant counts.

Convention: generators index rows, relations are columns.  The cokernel of
a rows x cols matrix A is F_p^rows / image(A), of dimension rows - rank(A).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionBudgetExceeded
from .ring import IwasawaSeries

DIMENSION_BUDGET = 8192


class FpMatrix:
    """Immutable dense matrix over F_p with a lazily cached rank."""

    __slots__ = ("p", "entries", "_rank")

    def __init__(self, p: int, entries):
        arr = np.array(entries, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            arr = arr.reshape(len(arr), -1) if arr.size else np.zeros((len(arr), 0), dtype=np.int64)
        arr %= p
        arr.setflags(write=False)
        self.p = p
        self.entries = arr
        self._rank: int | None = None

    @classmethod
    def zeros(cls, p: int, rows: int, cols: int) -> FpMatrix:
        return cls(p, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, p: int, n: int) -> FpMatrix:
        return cls(p, np.eye(n, dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def T(self) -> FpMatrix:
        return FpMatrix(self.p, self.entries.T)

    def rank(self) -> int:
        if self._rank is None:
            self._rank = rank_mod_p(self.entries, self.p)
        return self._rank

    def __eq__(self, other):
        if not isinstance(other, FpMatrix):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.p, self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        return f"FpMatrix(p={self.p}, {self.rows}x{self.cols})"


def rank_mod_p(A: np.ndarray, p: int) -> int:
    """Rank over F_p by Gaussian elimination on a private copy of ``A``."""
    W = np.array(A, dtype=np.int64, copy=True) % p
    m, n = W.shape
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.flatnonzero(W[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            W[[r, piv]] = W[[piv, r]]
        inv = pow(int(W[r, c]), -1, p)
        W[r, c:] = W[r, c:] * inv % p
        below = r + 1 + np.flatnonzero(W[r + 1 :, c])
        if below.size:
            W[np.ix_(below, np.arange(c, n))] = (
                W[np.ix_(below, np.arange(c, n))] - np.outer(W[below, c], W[r, c:])
            ) % p
        r += 1
    return r


def cokernel_dim(A: FpMatrix) -> int:
    return A.rows - A.rank()


def cokernel_length(A: np.ndarray, p: int, k: int) -> int:
    """p-exponent of |(Z/p^k)^rows / image(A)|.

    Smith-style elimination over the local ring Z/p^k: clear every unit
    pivot, divide the remainder by p and repeat.  A pivot found after j
    divisions contributes j; rows never pivoted contribute k.
    """
    pk = p**k
    W = np.array(A, dtype=np.int64, copy=True) % pk
    m = W.shape[0]
    pivots = 0
    length = 0
    for j in range(k):
        mod = p ** (k - j)
        W %= mod
        while W.size:
            units = np.argwhere(W % p != 0)
            if units.size == 0:
                break
            r, c = units[0]
            inv = pow(int(W[r, c]), -1, mod)
            col = W[:, c].copy()
            W = (W - np.outer(col * inv % mod, W[r])) % mod
            W = np.delete(np.delete(W, r, axis=0), c, axis=1)
            pivots += 1
            length += j
        if W.size == 0:
            break
        W //= p
    return length + k * (m - pivots)


def mult_matrix(fbar: IwasawaSeries | Sequence[int], p: int, n: int,
                budget: int = DIMENSION_BUDGET) -> FpMatrix:
    """Matrix of multiplication by ``fbar`` on F_p[X]/(X^(p^n)).

    Column j holds the coefficients of X^j * fbar, so the matrix is lower
    triangular Toeplitz.
    """
    size = p**n
    if size > budget:
        raise DimensionBudgetExceeded(f"p^n = {size} exceeds budget {budget}")
    return FpMatrix(p, toeplitz_block(_reduce(fbar, p), p, size))


def _reduce(fbar, p: int) -> np.ndarray:
    if isinstance(fbar, IwasawaSeries):
        fbar = fbar.mod_p()
    return np.asarray(fbar, dtype=np.int64) % p


def toeplitz_block(c: np.ndarray, p: int, size: int) -> np.ndarray:
    c = np.asarray(c, dtype=np.int64)[:size] % p
    padded = np.zeros(size, dtype=np.int64)
    padded[: len(c)] = c
    idx = np.subtract.outer(np.arange(size), np.arange(size))
    return np.where(idx >= 0, padded[np.clip(idx, 0, None)], 0)


def fixed_space_dim(T: FpMatrix) -> int:
    """dim ker(T - I) for a square operator T."""
    n = T.rows
    return n - FpMatrix(T.p, T.entries - np.eye(n, dtype=np.int64)).rank()


def coinvariant_dim(T: FpMatrix) -> int:
    """dim coker(T - I): the coinvariants of the cyclic group generated by T."""
    return fixed_space_dim(T)
