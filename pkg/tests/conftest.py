import itertools

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from iwasawa.ring import IwasawaSeries, RingParams

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

P3 = RingParams(3, 6, 32)
P5 = RingParams(5, 4, 24)
SMALL = RingParams(3, 4, 12)


@pytest.fixture
def P():
    return P3


def series(params: RingParams, max_len: int | None = None):
    n = params.M if max_len is None else max_len
    return st.lists(st.integers(0, params.q - 1), min_size=0, max_size=n).map(lambda c: IwasawaSeries(params, c))


def nonzero_series(params: RingParams, max_len: int | None = None):
    return series(params, max_len).filter(lambda f: not f.is_zero())


def unit_series(params: RingParams, max_len: int | None = None):
    return series(params, max_len).filter(lambda f: f.is_unit())


def naive_mul(a, b, q, M):
    out = [0] * M
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            if i + j < M:
                out[i + j] = (out[i + j] + x * y) % q
    return out


def leibniz_det(A, one, zero):
    """Permutation-sum determinant, the textbook oracle for small matrices."""
    n = len(A)
    total = zero
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = one
        for i in range(n):
            term = term * A[i][perm[i]]
        total = total - term if inv % 2 else total + term
    return total


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
