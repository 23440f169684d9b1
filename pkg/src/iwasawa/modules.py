"""Finitely presented modules over Lambda and their mu/lambda invariants.

A module is Lambda^g modulo the span of its relation vectors.  Two routes
compute invariants:

* the characteristic route: determinant of a square presentation, then
  Weierstrass read-off;
* the growth route: dimensions of (M/p)_{Gamma_n} over a window of levels n,
  computed by F_p linear algebra using (omega_n, p) = (X^(p^n), p).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionBudgetExceeded,
    NotDistinguished,
    NotSquare,
    ParamMismatch,
    PrecisionExhausted,
    SizeExceeded,
    Unstable,
)
from .fplin import DIMENSION_BUDGET, FpMatrix, cokernel_length, toeplitz_block
from .ring import (
    DET_SIZE_BOUND,
    IwasawaSeries,
    RingParams,
    det,
    exact_det,
    is_distinguished,
    series_invariants,
    twist_substitute,
)

CERTIFIED = "certified"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class ElementaryStructure:
    """Shape Lambda^r + sum Lambda/p^a_i + sum Lambda/(F_j), by degrees."""

    rank: int
    mu_exponents: tuple[int, ...] = ()
    degrees: tuple[int, ...] = ()

    @property
    def mu(self) -> int:
        return sum(self.mu_exponents)

    @property
    def lam(self) -> int:
        return sum(self.degrees)

    @property
    def s(self) -> int:
        return len(self.mu_exponents)

    def exact_growth(self, p: int, n: int) -> int:
        """(r+s) p^n + sum_j min(d_j, p^n)."""
        pn = p**n
        return (self.rank + self.s) * pn + sum(min(d, pn) for d in self.degrees)

    def __add__(self, other: ElementaryStructure) -> ElementaryStructure:
        return ElementaryStructure(
            self.rank + other.rank,
            self.mu_exponents + other.mu_exponents,
            self.degrees + other.degrees,
        )


@dataclass(frozen=True)
class PresentedModule:
    params: RingParams
    g: int
    relations: tuple[tuple[IwasawaSeries, ...], ...] = ()
    no_finite_submodule: str = UNKNOWN
    elementary_iso: str = UNKNOWN
    structure: ElementaryStructure | None = field(default=None, compare=False)

    def __post_init__(self):
        rels = tuple(tuple(v) for v in self.relations)
        object.__setattr__(self, "relations", rels)
        if self.g < 0:
            raise ValueError("negative generator count")
        for v in rels:
            if len(v) != self.g:
                raise ValueError(f"relation of length {len(v)} for {self.g} generators")
            for e in v:
                if e.params != self.params:
                    raise ParamMismatch("relation entry with foreign params")
        for flag in (self.no_finite_submodule, self.elementary_iso):
            if flag not in (CERTIFIED, UNKNOWN):
                raise ValueError(f"bad provenance flag {flag!r}")

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def matrix(self) -> list[list[IwasawaSeries]]:
        """g x m matrix: row i is generator i, column j is relation j."""
        return [[rel[i] for rel in self.relations] for i in range(self.g)]

    def mod_p_matrix(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        return tuple(tuple(e.mod_p() for e in rel) for rel in self.relations)

    def max_degree(self) -> int:
        return max((e.degree() for rel in self.relations for e in rel), default=-1)


@dataclass(frozen=True)
class InvariantReport:
    rank: int
    mu: int | None
    lam: int | None
    method: str
    precision_ok: bool
    lambda_tag: str = "lambda"
    mu_vanishes: bool | None = None
    rank_certified: bool = True
    slope: int | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "rank": self.rank,
            "rank_certified": self.rank_certified,
            "mu": self.mu,
            "mu_vanishes": self.mu_vanishes,
            "lambda": self.lam,
            "lambda_tag": self.lambda_tag,
            "slope": self.slope,
            "precision_ok": self.precision_ok,
        }


@dataclass(frozen=True)
class GrowthTrace:
    p: int
    entries: tuple[tuple[int, int], ...]
    slope: int | None = None
    intercept: int | None = None

    @property
    def exponents(self) -> list[int]:
        return [e for _, e in self.entries]

    def rows(self) -> list[dict]:
        out, prev = [], None
        for n, e in self.entries:
            out.append({"n": n, "pn": self.p**n, "e": e, "delta": None if prev is None else e - prev})
            prev = e
        return out


# -- constructors -------------------------------------------------------------

def zero_module(params: RingParams) -> PresentedModule:
    return PresentedModule(params, 0, (), CERTIFIED, CERTIFIED, ElementaryStructure(0))


def elementary(params: RingParams, r: int, a: Sequence[int] = (), F: Sequence[IwasawaSeries] = ()) -> PresentedModule:
    """Block-diagonal presentation of Lambda^r + sum Lambda/p^a_i + sum Lambda/(F_j)."""
    if r < 0:
        raise ValueError("negative rank")
    for ai in a:
        if ai < 1:
            raise ValueError("mu exponents must be >= 1")
        if ai >= params.N:
            raise PrecisionExhausted(f"p^{ai} vanishes at precision N={params.N}")
    for Fj in F:
        if Fj.params != params:
            raise ParamMismatch("F_j with foreign params")
        if not is_distinguished(Fj):
            raise NotDistinguished(repr(Fj))
    g = r + len(a) + len(F)
    zero = params.zero()
    rels = []
    gens = [params.const(params.p**ai) for ai in a] + list(F)
    for k, entry in enumerate(gens):
        v = [zero] * g
        v[r + k] = entry
        rels.append(tuple(v))
    structure = ElementaryStructure(r, tuple(a), tuple(Fj.degree() for Fj in F))
    return PresentedModule(params, g, tuple(rels), CERTIFIED, CERTIFIED, structure)


def ideal_syzygy(params: RingParams, a: int = 1, b: int = 1) -> PresentedModule:
    """Lambda^2 / <(X^b, -p^a)>, the ideal (p^a, X^b) of Lambda.

    Rank one, mu = lambda = 0, no finite submodule; its cokernel in Lambda is
    the finite module Lambda/(p^a, X^b).
    """
    Xb = params.series([0] * b + [1])
    rel = (Xb, params.const(-(params.p**a)))
    return PresentedModule(params, 2, (rel,), CERTIFIED, UNKNOWN, None)


def _and(x: str, y: str) -> str:
    return CERTIFIED if x == y == CERTIFIED else UNKNOWN


def direct_sum(A: PresentedModule, B: PresentedModule) -> PresentedModule:
    if A.params != B.params:
        raise ParamMismatch("direct sum of modules over different rings")
    zero = A.params.zero()
    rels = [tuple(v) + (zero,) * B.g for v in A.relations]
    rels += [(zero,) * A.g + tuple(v) for v in B.relations]
    structure = A.structure + B.structure if A.structure and B.structure else None
    return PresentedModule(
        A.params,
        A.g + B.g,
        tuple(rels),
        _and(A.no_finite_submodule, B.no_finite_submodule),
        _and(A.elementary_iso, B.elementary_iso),
        structure,
    )


def extension(A: PresentedModule, C: PresentedModule, rng: np.random.Generator, degree: int = 2) -> PresentedModule:
    """A module B in 0 -> A -> B -> C -> 0, by a block upper-triangular presentation.

    Each relation c of C is lifted to (e, c) with a random e in the A
    coordinates.  A -> B is injective whenever the relations of C are
    linearly independent over Lambda (true for elementary C).
    """
    if A.params != C.params:
        raise ParamMismatch("extension over different rings")
    params = A.params
    zero = params.zero()
    rels = [tuple(v) + (zero,) * C.g for v in A.relations]
    for v in C.relations:
        e = tuple(random_poly(params, rng, degree) for _ in range(A.g))
        rels.append(e + tuple(v))
    return PresentedModule(params, A.g + C.g, tuple(rels))


def random_poly(params: RingParams, rng: np.random.Generator, degree: int) -> IwasawaSeries:
    return params.series(int(c) for c in rng.integers(0, params.q, size=degree + 1))


def random_distinguished(params: RingParams, rng: np.random.Generator, d: int) -> IwasawaSeries:
    """X^d + p*(random lower part); degree 0 gives 1."""
    lower = [params.p * int(c) for c in rng.integers(0, params.q, size=d)]
    return params.series(lower + [1])


# -- invertible base changes -------------------------------------------------

def conjugate(M: PresentedModule, rng: np.random.Generator, n_ops: int | None = None,
              degree: int = 1) -> PresentedModule:
    """Apply seeded invertible row (generator) and column (relation) operations.

    Multipliers are polynomials of degree <= ``degree``; an operation is
    skipped if it would push a representative to degree >= M, so the result
    is an exact base change of the polynomial presentation.  The module is
    unchanged up to isomorphism, so flags and structure are kept.
    """
    params = M.params
    g, m = M.g, M.n_relations
    if g == 0:
        return M
    cols = [list(rel) for rel in M.relations]  # cols[j][i]: relation j, generator i
    n_ops = n_ops if n_ops is not None else 2 * (g + m)
    limit = params.M - 1

    def deg(x: IwasawaSeries) -> int:
        return x.degree()

    units = [params.const(2), params.series([1, 1]), params.series([1, params.p])]
    for _ in range(n_ops):
        kind = int(rng.integers(0, 3))
        on_rows = bool(rng.integers(0, 2)) or m < 2
        size = g if on_rows else m
        if size == 0:
            continue
        if kind == 0 and size >= 2:
            i, j = (int(x) for x in rng.choice(size, size=2, replace=False))
            c = random_poly(params, rng, degree)
            if on_rows:
                if all(deg(col[j]) + deg(c) < limit for col in cols):
                    for col in cols:
                        col[i] = col[i] + c * col[j]
            elif all(deg(x) + deg(c) < limit for x in cols[j]):
                cols[i] = [x + c * y for x, y in zip(cols[i], cols[j])]
        elif kind == 1 and size >= 2:
            i, j = (int(x) for x in rng.choice(size, size=2, replace=False))
            if on_rows:
                for col in cols:
                    col[i], col[j] = col[j], col[i]
            else:
                cols[i], cols[j] = cols[j], cols[i]
        else:
            i = int(rng.integers(0, size))
            u = units[int(rng.integers(0, len(units)))]
            if on_rows:
                if all(deg(col[i]) + deg(u) < limit for col in cols):
                    for col in cols:
                        col[i] = col[i] * u
            elif all(deg(x) + deg(u) < limit for x in cols[i]):
                cols[i] = [x * u for x in cols[i]]
    return replace(M, relations=tuple(tuple(c) for c in cols))


def twist_module(M: PresentedModule, i: int, sign: int = 1) -> PresentedModule:
    """Presentation of M(i): substitute X -> u0^(sign*i) (1+X) - 1 in every entry."""
    if i == 0:
        return M
    rels = tuple(tuple(twist_substitute(e, sign * i) for e in rel) for rel in M.relations)
    return replace(M, relations=rels)


def mod_p_isomorphic_perturbation(M: PresentedModule, seed, degree: int = 3) -> PresentedModule:
    """M' with relation matrix M + p*(random matrix), so M'/p = M/p."""
    rng = np.random.default_rng(seed)
    p = M.params.p
    rels = tuple(
        tuple(e + random_poly(M.params, rng, degree) * p for e in rel) for rel in M.relations
    )
    return PresentedModule(M.params, M.g, rels)


# -- coinvariant growth --------------------------------------------------------

def default_window(p: int) -> int:
    """Largest n_max with p^n_max <= 125, but at least 2 (4 for p=3, 3 for p=5)."""
    n = 2
    while p ** (n + 1) <= 125:
        n += 1
    return n


def _block_matrix(M: PresentedModule, size: int, modulus: int) -> np.ndarray:
    """Matrix over Z/modulus of the presentation on (Z/modulus)[X]/(X^size)."""
    g, m = M.g, M.n_relations
    A = np.zeros((g * size, m * size), dtype=np.int64)
    for j, rel in enumerate(M.relations):
        for i, e in enumerate(rel):
            if e.is_zero():
                continue
            c = np.asarray(e.coeffs[:size], dtype=np.int64) % modulus
            if not c.any():
                continue
            A[i * size:(i + 1) * size, j * size:(j + 1) * size] = toeplitz_block(c, modulus, size)
    return A


def coinvariant_exponent(M: PresentedModule, n: int, budget: int = DIMENSION_BUDGET) -> int:
    """e((M/p)_{Gamma_n}) = g p^n - rank of the mod-p presentation on F_p[X]/(X^(p^n))."""
    p = M.params.p
    size = p**n
    if M.g * size > budget:
        raise DimensionBudgetExceeded(f"g*p^n = {M.g * size} exceeds budget {budget}")
    if M.g == 0:
        return 0
    A = FpMatrix(p, _block_matrix(M, size, p))
    return A.rows - A.rank()


def _stable_slope(points: Sequence[tuple[int, int]]) -> tuple[int | None, int | None]:
    """Slope and intercept if the last two increments agree and are integral."""
    if len(points) < 3:
        return None, None
    (x0, y0), (x1, y1), (x2, y2) = points[-3:]
    d1, d2 = y1 - y0, y2 - y1
    w1, w2 = x1 - x0, x2 - x1
    if d1 % w1 or d2 % w2 or d1 // w1 != d2 // w2:
        return None, None
    s = d2 // w2
    return s, y2 - s * x2


def growth_trace(M: PresentedModule, n_max: int | None = None, budget: int = DIMENSION_BUDGET) -> GrowthTrace:
    p = M.params.p
    n_max = default_window(p) if n_max is None else n_max
    entries = tuple((n, coinvariant_exponent(M, n, budget)) for n in range(n_max + 1))
    slope, intercept = _stable_slope([(p**n, e) for n, e in entries])
    return GrowthTrace(p, entries, slope, intercept)


def layer_length(M: PresentedModule, k: int, L: int) -> int:
    """p-exponent of |M / (p^k, X^L)|, for L <= M (the X-precision)."""
    if L > M.params.M:
        raise PrecisionExhausted(f"L = {L} beyond X-precision {M.params.M}")
    if k > M.params.N:
        raise PrecisionExhausted(f"k = {k} beyond p-precision {M.params.N}")
    if M.g == 0:
        return 0
    A = _block_matrix(M, L, M.params.p**k)
    return cokernel_length(A, M.params.p, k)


def mu_via_layers(M: PresentedModule, rank: int, points: int = 4) -> int | None:
    """mu from the growth of |M/(p^k, X^L)| in L, for k = 1, 2, ...

    For k fixed the length grows like (k r + sum_i min(a_i, k)) L, so the
    jump in slope from k-1 to k is r + #{i : a_i >= k}.  Returns None when a
    slope fails to stabilise over the last ``points`` values of L <= M, or
    when p-torsion persists up to the p-adic precision.
    """
    top = M.params.M
    Ls = list(range(top - points + 1, top + 1))
    prev, mu = 0, 0
    for k in range(1, M.params.N + 1):
        lengths = [layer_length(M, k, L) for L in Ls]
        incs = {b - a for a, b in zip(lengths, lengths[1:])}
        if len(incs) != 1:
            return None
        sigma = incs.pop()
        extra = sigma - prev - rank
        if extra < 0:
            return None
        if extra == 0:
            return mu
        mu += extra
        prev = sigma
    return None


# -- rank and the characteristic route ---------------------------------------

def _nonzero_minor_exists(A: list[list[IwasawaSeries]], k: int, params: RingParams) -> bool:
    g, m = len(A), len(A[0]) if A else 0
    live_rows = [i for i in range(g) if any(not e.is_zero() for e in A[i])]
    live_cols = [j for j in range(m) if any(not A[i][j].is_zero() for i in range(g))]
    if len(live_rows) < k or len(live_cols) < k:
        return False
    for cols in itertools.combinations(live_cols, k):
        for rows in itertools.combinations(live_rows, k):
            sub = [[A[i][j] for j in cols] for i in rows]
            if not det(sub, bound=k, params=params).is_zero():
                return True
    return False


def rank_certificate(M: PresentedModule, bound: int = DET_SIZE_BOUND) -> tuple[int, bool]:
    """(g - largest k with a k x k minor nonzero at precision, certified).

    Uncertified when some (k+1)-minor vanishes at precision but not as an
    integer polynomial, i.e. its vanishing may be an artefact of truncation.
    """
    g, m = M.g, M.n_relations
    if g == 0 or m == 0:
        return g, True
    kmax = min(g, m)
    if kmax > bound:
        raise SizeExceeded(f"minors of size {kmax} exceed the bound {bound}")
    A = M.matrix()
    k = 0
    for size in range(kmax, 0, -1):
        if _nonzero_minor_exists(A, size, M.params):
            k = size
            break
    certified = True
    if k < kmax:
        for cols in itertools.combinations(range(m), k + 1):
            for rows in itertools.combinations(range(g), k + 1):
                if exact_det([[A[i][j] for j in cols] for i in rows]):
                    certified = False
                    break
            if not certified:
                break
    return g - k, certified


def rank_estimate(M: PresentedModule, bound: int = DET_SIZE_BOUND) -> int:
    return rank_certificate(M, bound)[0]


def char_generator(M: PresentedModule) -> IwasawaSeries:
    if M.g != M.n_relations:
        raise NotSquare(f"{M.g} generators, {M.n_relations} relations")
    return det(M.matrix(), params=M.params)


def char_invariants(M: PresentedModule) -> InvariantReport:
    """(mu, lambda) of det of a square presentation of a torsion module."""
    D = char_generator(M)
    if D.is_zero():
        raise PrecisionExhausted("determinant vanishes at precision (not torsion?)")
    mu, lam = series_invariants(D)
    ok = mu < M.params.N and lam < M.params.M
    return InvariantReport(0, mu, lam, "char_generator", ok, "lambda", mu == 0)


def invariants_via_growth(M: PresentedModule, n_max: int | None = None,
                          budget: int = DIMENSION_BUDGET) -> InvariantReport:
    """Rank from minors; mu-vanishing and lambda from the coinvariant trace.

    mu = 0 iff the stabilised slope equals the rank.  Otherwise the value of
    mu comes from :func:`mu_via_layers`.  lambda is the stabilised intercept
    e_n - slope * p^n; it equals lambda(M) only for modules certified
    isomorphic to an elementary module, hence the tag.
    """
    if M.g == 0:
        return InvariantReport(0, 0, 0, "growth", True, "lambda", True, True, 0)
    r, r_ok = rank_certificate(M)
    trace = growth_trace(M, n_max, budget)
    if trace.slope is None:
        raise Unstable(f"growth trace did not stabilise: {trace.exponents}")
    if trace.slope < r:
        raise Unstable(f"slope {trace.slope} below rank {r}")
    vanishes = trace.slope == r
    mu = 0 if vanishes else mu_via_layers(M, r)
    tag = "lambda" if M.elementary_iso == CERTIFIED else "lambda+defect"
    return InvariantReport(
        r, mu, trace.intercept, "growth", mu is not None and r_ok, tag, vanishes, r_ok, trace.slope
    )


def torsion_part(M: PresentedModule) -> PresentedModule:
    """Drop the free generators of an elementary module (rows with no relation)."""
    if M.structure is None or M.elementary_iso != CERTIFIED:
        raise ValueError("torsion part is only defined here for elementary modules")
    r = M.structure.rank
    rels = tuple(rel[r:] for rel in M.relations)
    if any(not e.is_zero() for rel in M.relations for e in rel[:r]):
        raise ValueError("module is not in block elementary form")
    return PresentedModule(
        M.params, M.g - r, rels, M.no_finite_submodule, M.elementary_iso,
        ElementaryStructure(0, M.structure.mu_exponents, M.structure.degrees),
    )


def same_mod_p(A: PresentedModule, B: PresentedModule) -> bool:
    return A.params == B.params and A.g == B.g and A.mod_p_matrix() == B.mod_p_matrix()


def relations_from_lists(params: RingParams, g: int, rels: Iterable[Iterable[Iterable[int]]]) -> tuple:
    return tuple(tuple(params.series(c) for c in rel) for rel in rels)
