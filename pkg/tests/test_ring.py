import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import P3, P5, SMALL, leibniz_det, naive_mul, nonzero_series, series, unit_series
from iwasawa.errors import NotDistinguished, NotDivisible, ParamMismatch, PrecisionExhausted, SizeExceeded
from iwasawa.ring import (
    IwasawaSeries,
    RingParams,
    det,
    exact_det,
    is_distinguished,
    omega,
    p_valuation,
    ring_arith,
    series_invariants,
    twist_substitute,
    weierstrass_divide,
    weierstrass_prepare,
)


def s(params, *c):
    return IwasawaSeries(params, c)


class TestParams:
    def test_defaults(self):
        P = RingParams(3, 6, 32)
        assert P.u0 == 4 and P.q == 729

    @pytest.mark.parametrize("bad", [(2, 6, 32), (9, 6, 32), (3, 0, 32), (3, 6, 1)])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            RingParams(*bad)

    def test_u0_must_be_one_mod_p(self):
        with pytest.raises(ValueError):
            RingParams(3, 6, 32, 5)

    def test_u0_reduced(self):
        assert RingParams(3, 2, 8, 4 + 9).u0 == 4


class TestArithmetic:
    def test_product_example(self):
        assert s(P3, 3, 1) * s(P3, 1, 1) == s(P3, 3, 4, 1)

    def test_reduction_on_construction(self):
        f = IwasawaSeries(P3, [-1, 729, 730] + [1] * 40)
        assert f.coeffs[:3] == (728, 0, 1) and len(f.coeffs) == 32

    def test_param_mismatch(self):
        with pytest.raises(ParamMismatch):
            s(P3, 1) + s(P5, 1)

    def test_ring_arith_ops(self):
        a, b = s(P3, 1, 2), s(P3, 3)
        assert ring_arith(a, b, "add") == a + b
        assert ring_arith(a, b, "sub") == a - b
        assert ring_arith(a, b, "mul") == a * b
        with pytest.raises(ValueError):
            ring_arith(a, b, "/")

    @given(series(P3), series(P3))
    def test_mul_matches_schoolbook(self, a, b):
        assert (a * b).coeffs == tuple(naive_mul(a.coeffs, b.coeffs, P3.q, P3.M))

    @given(series(P3), series(P3), series(P3))
    def test_ring_axioms(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a - a == P3.zero()

    @given(unit_series(P3))
    def test_inverse(self, u):
        assert u * u.inverse() == P3.one()

    def test_non_unit_inverse_fails(self):
        with pytest.raises(ZeroDivisionError):
            s(P3, 3, 1).inverse()

    @given(unit_series(P5), st.integers(-3, 3))
    def test_pow(self, u, k):
        expected = P5.one()
        for _ in range(abs(k)):
            expected = expected * (u if k > 0 else u.inverse())
        assert u**k == expected

    def test_degree_and_mod_p(self):
        f = s(P3, 3, 6, 1)
        assert f.degree() == 2 and f.mod_p()[:3] == (0, 0, 1)
        assert P3.zero().degree() == -1


class TestOmega:
    def test_example(self):
        assert omega(P3, 1) == s(P3, 0, 3, 3, 1)

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_distinguished_of_degree_pn(self, n):
        w = omega(P3, n)
        assert is_distinguished(w) and w.degree() == 3**n
        assert series_invariants(w) == (0, 3**n)

    def test_binomial_oracle(self):
        w = omega(P3, 2)
        assert list(w.coeffs[:10]) == [0] + [math.comb(9, k) % 729 for k in range(1, 10)]

    def test_out_of_range(self):
        with pytest.raises(PrecisionExhausted):
            omega(P3, 4)


class TestInvariants:
    def test_examples(self):
        assert series_invariants(s(P3, -9, 0, 1)) == (0, 2)
        assert series_invariants(s(P3, 9, 18, 3)) == (1, 2)
        assert series_invariants(s(P3, 3, 9, 18)) == (1, 0)

    def test_zero(self):
        with pytest.raises(PrecisionExhausted):
            series_invariants(P3.zero())

    @given(nonzero_series(P3), nonzero_series(P3))
    def test_additive_under_product(self, f, g):
        # oracle: direct scan for the minimal valuation position
        mf, lf = series_invariants(f)
        mg, lg = series_invariants(g)
        if mf + mg < P3.N and lf + lg < P3.M:
            assert series_invariants(f * g) == (mf + mg, lf + lg)

    def test_p_valuation(self):
        assert p_valuation(0, 3, 6) == 6
        assert p_valuation(54, 3, 6) == 3


class TestWeierstrass:
    def test_division_example(self):
        q, r = weierstrass_divide(s(P3, 3, 4, 1), s(P3, 3, 1))
        assert q == s(P3, 1, 1) and r.is_zero()

    def test_division_by_mu_positive(self):
        with pytest.raises(NotDivisible):
            weierstrass_divide(s(P3, 1), s(P3, 3))

    def test_prepare_example(self):
        W = weierstrass_prepare(s(P3, 3, 3))
        assert (W.mu, W.degree) == (1, 0)
        assert W.distinguished == P3.one() and W.unit == s(P3, 1, 1)

    def test_prepare_distinguished_is_fixed(self):
        F = s(P3, 6, 3, 1)
        W = weierstrass_prepare(F)
        assert W.distinguished == F and W.unit == P3.one()

    @given(nonzero_series(P3), nonzero_series(P3, 8).filter(lambda g: series_invariants(g)[0] == 0))
    def test_division_identity(self, f, g):
        q, r = weierstrass_divide(f, g)
        assert q * g + r == f
        assert r.degree() < series_invariants(g)[1]

    @given(nonzero_series(P5))
    def test_recomposition(self, f):
        mu, lam = series_invariants(f)
        W = weierstrass_prepare(f)
        assert W.recompose() == f
        assert W.mu == mu and W.degree == lam
        assert is_distinguished(W.distinguished) and W.unit.is_unit()


class TestTwist:
    def test_example(self):
        assert twist_substitute(s(P3, 0, 1), 1) == s(P3, 3, 4)

    def test_binomial_oracle(self):
        # f = X^3: (a(1+X) - 1)^3 expanded by the binomial theorem
        a = pow(4, 2, 729)
        got = twist_substitute(s(P3, 0, 0, 0, 1), 2)
        lin = [(a - 1) % 729, a]
        want = [sum(math.comb(3, k) * lin[1] ** k * lin[0] ** (3 - k) * (1 if j == k else 0) for k in range(4)) % 729
                for j in range(4)]
        assert list(got.coeffs[:4]) == want

    @given(series(SMALL, 6), series(SMALL, 6), st.integers(-5, 5))
    def test_ring_homomorphism(self, f, g, i):
        # reliable below X^(M - N + 1); inputs of low degree stay exact
        assert twist_substitute(f * g, i) == twist_substitute(f, i) * twist_substitute(g, i)
        assert twist_substitute(f + g, i) == twist_substitute(f, i) + twist_substitute(g, i)

    @given(series(SMALL, 6), st.integers(-5, 5))
    def test_round_trip(self, f, i):
        assert twist_substitute(twist_substitute(f, i), -i) == f

    @given(nonzero_series(P3, 10), st.integers(-5, 5))
    def test_preserves_invariants(self, f, i):
        assert series_invariants(twist_substitute(f, i)) == series_invariants(f)

    def test_trivial_twist(self):
        f = s(P3, 1, 2, 3)
        assert twist_substitute(f, 0) == f


class TestDeterminant:
    def test_example(self):
        X = P3.X()
        assert det([[X, P3.const(3)], [P3.const(3), X]]) == s(P3, -9, 0, 1)

    def test_empty(self):
        assert det([], params=P3) == P3.one()

    def test_size_bound(self):
        with pytest.raises(SizeExceeded):
            det([[P3.one()] * 9 for _ in range(9)])

    @given(st.integers(1, 4).flatmap(lambda n: st.lists(st.lists(series(P3, 4), min_size=n, max_size=n), min_size=n, max_size=n)))
    def test_matches_leibniz(self, A):
        assert det(A) == leibniz_det(A, P3.one(), P3.zero())

    @given(st.lists(st.lists(series(P3, 3), min_size=3, max_size=3), min_size=3, max_size=3),
           st.lists(st.lists(series(P3, 3), min_size=3, max_size=3), min_size=3, max_size=3))
    def test_multiplicative(self, A, B):
        AB = [[sum((A[i][k] * B[k][j] for k in range(3)), P3.zero()) for j in range(3)] for i in range(3)]
        assert det(AB) == det(A) * det(B)

    @given(st.lists(st.lists(series(P3, 4), min_size=3, max_size=3), min_size=3, max_size=3))
    def test_exact_det_reduces_to_det(self, A):
        assert IwasawaSeries(P3, exact_det(A)) == det(A)


def test_not_distinguished_error_type():
    assert issubclass(NotDistinguished, Exception)
