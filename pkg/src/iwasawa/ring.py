"""Truncated Iwasawa algebra Lambda_{N,M} = (Z/p^N)[X]/(X^M).

Elements are stored as canonical residue tuples.  The representative of a
series is the integer polynomial whose coefficients are those residues;
several routines (twisting, mod-p matrices at levels beyond X^M) treat that
representative as an exact polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .errors import NotDivisible, ParamMismatch, PrecisionExhausted, SizeExceeded

DET_SIZE_BOUND = 8

_INT64_SAFE = 2**62


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % k for k in range(3, math.isqrt(n) + 1, 2))


def p_valuation(x: int, p: int, cap: int) -> int:
    """Valuation of ``x`` at ``p``, capped at ``cap`` (also returned for 0)."""
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


@dataclass(frozen=True)
class RingParams:
    """Parameters of Lambda_{N,M}: prime ``p``, p-adic precision ``N``,
    X-adic truncation ``M`` and the image ``u0`` of the topological
    generator in 1 + pZ (defaults to 1 + p)."""

    p: int
    N: int
    M: int
    u0: int | None = None
    q: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (isinstance(self.p, int) and self.p >= 3 and _is_prime(self.p)):
            raise ValueError(f"p must be an odd prime, got {self.p!r}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.M < 2:
            raise ValueError("M must be >= 2")
        q = self.p**self.N
        u0 = (1 + self.p) if self.u0 is None else self.u0
        u0 %= q
        if u0 % self.p != 1:
            raise ValueError(f"u0 must be 1 mod p, got {self.u0}")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "q", q)

    def zero(self) -> IwasawaSeries:
        return IwasawaSeries(self, ())

    def one(self) -> IwasawaSeries:
        return IwasawaSeries(self, (1,))

    def const(self, c: int) -> IwasawaSeries:
        return IwasawaSeries(self, (c,))

    def X(self) -> IwasawaSeries:
        return IwasawaSeries(self, (0, 1))

    def series(self, coeffs: Iterable[int]) -> IwasawaSeries:
        return IwasawaSeries(self, coeffs)


def _convolve(a: Sequence[int], b: Sequence[int], q: int, M: int) -> tuple[int, ...]:
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return ()
    if q * q * min(la, lb) < _INT64_SAFE:
        out = np.convolve(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        return tuple(int(c) for c in out[:M] % q)
    res = [0] * min(M, la + lb - 1)
    for i, x in enumerate(a):
        if x == 0 or i >= M:
            continue
        for j in range(min(lb, M - i)):
            res[i + j] += x * b[j]
    return tuple(c % q for c in res)


class IwasawaSeries:
    """An element of Lambda_{N,M}, immutable and hashable.

    ``coeffs`` always has length ``M`` with entries in ``[0, p^N)``.
    """

    __slots__ = ("params", "coeffs")

    def __init__(self, params: RingParams, coeffs: Iterable[int]):
        q, M = params.q, params.M
        c = [int(x) % q for x in list(coeffs)[:M]]
        c.extend([0] * (M - len(c)))
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "coeffs", tuple(c))

    def __setattr__(self, name, value):
        raise AttributeError("IwasawaSeries is immutable")

    # -- structure ---------------------------------------------------------
    def _check(self, other: IwasawaSeries) -> None:
        if self.params != other.params:
            raise ParamMismatch(f"{self.params} != {other.params}")

    def _coerce(self, other) -> IwasawaSeries:
        if isinstance(other, IwasawaSeries):
            self._check(other)
            return other
        if isinstance(other, (int, np.integer)):
            return self.params.const(int(other))
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, IwasawaSeries):
            return self.params == other.params and self.coeffs == other.coeffs
        if isinstance(other, (int, np.integer)):
            return self.coeffs == self.params.const(int(other)).coeffs
        return NotImplemented

    def __hash__(self):
        return hash((self.params, self.coeffs))

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if k == 0:
                terms.append(str(c))
            else:
                mono = "X" if k == 1 else f"X^{k}"
                terms.append(mono if c == 1 else f"{c}*{mono}")
        body = " + ".join(terms) if terms else "0"
        return f"IwasawaSeries({body}; p={self.params.p}, N={self.params.N}, M={self.params.M})"

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return IwasawaSeries(self.params, (a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return IwasawaSeries(self.params, (a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return IwasawaSeries(self.params, (-a for a in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return IwasawaSeries(self.params, (a * int(other) for a in self.coeffs))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a = self.coeffs[: self.degree() + 1]
        b = other.coeffs[: other.degree() + 1]
        return IwasawaSeries(self.params, _convolve(a, b, self.params.q, self.params.M))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result, base = self.params.one(), self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- queries -----------------------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def degree(self) -> int:
        """Index of the highest nonzero coefficient, -1 for zero."""
        for k in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[k]:
                return k
        return -1

    def is_unit(self) -> bool:
        return self.coeffs[0] % self.params.p != 0

    def mod_p(self) -> tuple[int, ...]:
        p = self.params.p
        return tuple(c % p for c in self.coeffs)

    def inverse(self) -> IwasawaSeries:
        if not self.is_unit():
            raise ZeroDivisionError("series is not a unit (constant term divisible by p)")
        q, M = self.params.q, self.params.M
        c = self.coeffs
        b0 = pow(c[0], -1, q)
        b = [b0]
        for k in range(1, M):
            s = sum(c[j] * b[k - j] for j in range(1, k + 1))
            b.append(-b0 * s % q)
        return IwasawaSeries(self.params, b)

    def shift_down(self, d: int) -> IwasawaSeries:
        """The series sum_{k>=d} c_k X^{k-d} (the top d coefficients become 0)."""
        return IwasawaSeries(self.params, self.coeffs[d:])

    def divide_by_p_power(self, k: int) -> IwasawaSeries:
        """Exact quotient by p^k of a series whose coefficients are all
        divisible by p^k; the result is determined only modulo p^(N-k)."""
        pk = self.params.p**k
        if any(c % pk for c in self.coeffs):
            raise ValueError(f"series not divisible by p^{k}")
        return IwasawaSeries(self.params, (c // pk for c in self.coeffs))


def ring_arith(a: IwasawaSeries, b: IwasawaSeries, op: str) -> IwasawaSeries:
    a._check(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def omega(params: RingParams, n: int) -> IwasawaSeries:
    """(1+X)^(p^n) - 1, which needs p^n < M to keep its leading term."""
    pn = params.p**n
    if pn >= params.M:
        raise PrecisionExhausted(f"p^n = {pn} >= M = {params.M}")
    q = params.q
    return IwasawaSeries(params, [0] + [math.comb(pn, k) % q for k in range(1, pn + 1)])


def series_invariants(f: IwasawaSeries) -> tuple[int, int]:
    """(mu, lambda) of a nonzero series at working precision.

    mu is the minimum p-adic valuation of the coefficients and lambda the
    first index where that minimum is attained.
    """
    if f.is_zero():
        raise PrecisionExhausted("series vanishes modulo (p^N, X^M)")
    p, N = f.params.p, f.params.N
    vals = [p_valuation(c, p, N) for c in f.coeffs]
    mu = min(vals)
    if mu >= N:
        raise PrecisionExhausted("no coefficient survives below p^N")
    return mu, vals.index(mu)


def weierstrass_divide(f: IwasawaSeries, g: IwasawaSeries) -> tuple[IwasawaSeries, IwasawaSeries]:
    """Return (q, r) with f = q*g + r in Lambda_{N,M} and deg r < lambda(g)."""
    f._check(g)
    mu, d = series_invariants(g)
    if mu > 0:
        raise NotDivisible(f"divisor has mu = {mu} > 0")
    if d >= g.params.M:
        raise PrecisionExhausted("Weierstrass degree not below X^M")
    unit_inv = g.shift_down(d).inverse()
    quo = f.params.zero()
    h = f
    # each pass raises the p-adic valuation of the upper part of h by one
    for _ in range(f.params.N + 1):
        top = h.shift_down(d)
        if top.is_zero():
            break
        step = top * unit_inv
        quo = quo + step
        h = h - step * g
    else:
        raise AssertionError("Weierstrass division failed to converge")
    return quo, h


@dataclass(frozen=True)
class WeierstrassData:
    mu: int
    distinguished: IwasawaSeries
    unit: IwasawaSeries
    degree: int

    def recompose(self) -> IwasawaSeries:
        return self.unit * self.distinguished * (self.unit.params.p**self.mu)


def is_distinguished(F: IwasawaSeries) -> bool:
    d = F.degree()
    if d < 0 or F.coeffs[d] != 1:
        return False
    return all(c % F.params.p == 0 for c in F.coeffs[:d])


def weierstrass_prepare(f: IwasawaSeries) -> WeierstrassData:
    """Factor f = p^mu * u * F with F distinguished of degree lambda(f)."""
    mu, d = series_invariants(f)
    params = f.params
    f1 = f.divide_by_p_power(mu)
    if d == 0:
        return WeierstrassData(mu, params.one(), f1, 0)
    Xd = params.series([0] * d + [1])
    quo, rem = weierstrass_divide(Xd, f1)
    F = Xd - rem
    # dividing by F directly gives the cleanest unit representative; F is a
    # zero divisor in the truncated ring, so fall back to 1/quo if needed
    unit, r = weierstrass_divide(f1, F)
    if not r.is_zero():
        unit = quo.inverse()
    return WeierstrassData(mu, F, unit, d)


def twist_substitute(f: IwasawaSeries, i: int) -> IwasawaSeries:
    """f(u0^i (1+X) - 1), computed on the polynomial representative.

    The representative has degree < M and the substitution is linear in X,
    so no coefficient is lost to truncation.  Only the coefficients of
    degree <= M - N are independent of the choice of representative.
    """
    params = f.params
    q = params.q
    a = pow(params.u0, i, q)
    b = (a - 1) % q
    d = f.degree()
    if d < 0:
        return f
    acc = [f.coeffs[d]]
    for k in range(d - 1, -1, -1):
        # acc <- acc * ((a-1) + a X) + c_k
        nxt = [b * acc[0] + f.coeffs[k]]
        for j in range(1, len(acc)):
            nxt.append(b * acc[j] + a * acc[j - 1])
        nxt.append(a * acc[-1])
        acc = [c % q for c in nxt]
    return IwasawaSeries(params, acc)


T = TypeVar("T")


def _det_dp(
    rows: Sequence[Sequence[T]],
    mul: Callable[[T, T], T],
    add: Callable[[T, T], T],
    neg: Callable[[T], T],
    is_zero: Callable[[T], bool],
    one: T,
) -> T | None:
    """Cofactor expansion with memoised minors over column subsets.

    Returns None for a zero result.  O(2^n * n) ring multiplications.
    """
    n = len(rows)
    states: dict[int, T] = {0: one}
    for r in range(n):
        nxt: dict[int, T] = {}
        row = rows[r]
        for mask, val in states.items():
            unused_below = 0
            for j in range(n):
                bit = 1 << j
                if mask & bit:
                    continue
                entry = row[j]
                if not is_zero(entry):
                    term = mul(val, entry)
                    if unused_below & 1:
                        term = neg(term)
                    key = mask | bit
                    nxt[key] = add(nxt[key], term) if key in nxt else term
                unused_below += 1
        states = {k: v for k, v in nxt.items() if not is_zero(v)}
        if not states:
            return None
    return states.get((1 << n) - 1)


def det(
    A: Sequence[Sequence[IwasawaSeries]],
    bound: int = DET_SIZE_BOUND,
    params: RingParams | None = None,
) -> IwasawaSeries:
    """Determinant in Lambda_{N,M} by cofactor expansion.

    ``params`` is only needed for the 0x0 matrix, whose determinant is 1.
    """
    n = len(A)
    if n > bound:
        raise SizeExceeded(f"{n}x{n} matrix exceeds the bound {bound}")
    if any(len(row) != n for row in A):
        raise ValueError("matrix is not square")
    if n == 0:
        if params is None:
            raise ValueError("params required for an empty matrix")
        return params.one()
    params = A[0][0].params
    for row in A:
        for e in row:
            A[0][0]._check(e)
    out = _det_dp(A, lambda x, y: x * y, lambda x, y: x + y, lambda x: -x, IwasawaSeries.is_zero, params.one())
    return params.zero() if out is None else out


# -- exact integer polynomials (for certification of vanishing minors) ------

def _ipoly_mul(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    out = np.convolve(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
    return _ipoly_trim(tuple(int(c) for c in out))


def _ipoly_add(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    if len(a) < len(b):
        a, b = b, a
    return _ipoly_trim(tuple(x + (b[k] if k < len(b) else 0) for k, x in enumerate(a)))


def _ipoly_trim(a: tuple[int, ...]) -> tuple[int, ...]:
    k = len(a)
    while k and a[k - 1] == 0:
        k -= 1
    return a[:k]


def exact_det(A: Sequence[Sequence[IwasawaSeries]]) -> tuple[int, ...]:
    """Determinant of the representative polynomials, computed in Z[X]."""
    rows = [[_ipoly_trim(e.coeffs) for e in row] for row in A]
    out = _det_dp(rows, _ipoly_mul, _ipoly_add, lambda x: tuple(-c for c in x), lambda x: not x, (1,))
    return () if out is None else out
