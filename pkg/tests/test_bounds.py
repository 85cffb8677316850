import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc

from macres.bounds import (
    berry_esseen_check,
    hoeffding_bound,
    hoeffding_check,
    janson_bound,
    janson_check,
    qfunc,
    qfunc_inv,
    sum_distribution,
)
from macres.errors import PreconditionError

from conftest import seeds


def q_oracle(a):
    return 0.5 * erfc(a / math.sqrt(2))


def test_q_examples():
    assert qfunc(0) == pytest.approx(0.5, abs=1e-14)
    assert qfunc(1.0) == pytest.approx(0.158655, abs=1e-6)
    assert qfunc_inv(0.05) == pytest.approx(1.644854, abs=1e-6)


def test_q_matches_erfc_and_decreases():
    grid = np.linspace(-8, 8, 161)
    vals = [qfunc(a) for a in grid]
    for a, v in zip(grid, vals):
        assert v == pytest.approx(q_oracle(a), abs=1e-13)
    assert all(x > y for x, y in zip(vals, vals[1:]))


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-8, max_value=1 - 1e-8))
def test_q_round_trip(p):
    assert abs(qfunc(qfunc_inv(p)) - p) <= 1e-10


def test_q_domain():
    with pytest.raises(ValueError):
        qfunc_inv(0)
    with pytest.raises(ValueError):
        qfunc_inv(1)
    with pytest.raises(ValueError):
        qfunc(float("nan"))


def test_hoeffding_examples():
    assert hoeffding_bound(10, 0.5) == pytest.approx(math.exp(-10 / 12), abs=1e-15)
    assert hoeffding_bound(10, 0.5) == pytest.approx(0.434598, abs=1e-6)
    assert hoeffding_bound(10, 1e-9) == pytest.approx(1, abs=1e-12)
    c = hoeffding_check([([0, 1], [0.5, 0.5])] * 10, 5, 0.5)
    assert c.tail == pytest.approx(56 / 1024, abs=1e-15)
    assert c.passed and c.slack > 0


def test_hoeffding_parameter_checks():
    with pytest.raises(ValueError):
        hoeffding_bound(1, 1.0)
    with pytest.raises(PreconditionError):
        hoeffding_check([([0, 1], [0.5, 0.5])] * 4, 1.0, 0.5)
    with pytest.raises(ValueError):
        hoeffding_check([([0, 2], [0.5, 0.5])], 1.0, 0.5)
    with pytest.raises(ValueError):
        hoeffding_check([([0, 1], [0.5, 0.5])] * 21, 11, 0.5)


@pytest.mark.parametrize("k", range(1, 21))
@pytest.mark.parametrize("p", [0.05, 0.3, 0.5, 0.8])
def test_hoeffding_binomial_families(k, p):
    for d in (0.05, 0.25, 0.5, 0.75, 0.95):
        c = hoeffding_check([([0, 1], [1 - p, p])] * k, k * p, d)
        # binomial tail by direct summation
        cut = k * p * (1 + d)
        ref = sum(comb(k, j) * p**j * (1 - p) ** (k - j) for j in range(k + 1) if j > cut - 1e-12)
        assert c.tail == pytest.approx(ref, abs=1e-12)
        assert c.passed


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_hoeffding_random_multilevel(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 9))
    var = [(rng.random(3), rng.dirichlet(np.ones(3))) for _ in range(k)]
    mu = sum(float(v @ p) for v, p in var)
    assert hoeffding_check(var, mu, float(rng.uniform(0.05, 0.95))).passed


def test_sum_distribution_merges_keys():
    v, p = sum_distribution([([0, 1], [0.5, 0.5])] * 3)
    np.testing.assert_allclose(v, [0, 1, 2, 3])
    np.testing.assert_allclose(p, [1 / 8, 3 / 8, 3 / 8, 1 / 8])


def test_janson_examples():
    assert janson_bound(100, 4, 10) == pytest.approx(math.exp(-0.5), abs=1e-15)
    # chi = 1: the two-sided Hoeffding exponent exp(-2 delta^2 / n)
    assert janson_bound(8, 1, 2) == pytest.approx(math.exp(-1), abs=1e-15)
    base = [[0.5, 0.5]] * 4
    variables = [(g, j, [0.0, 1.0]) for g in range(2) for j in range(4)]
    c = janson_check(base, variables, 1.0)
    assert c.passed
    # A = 2 * Bin(4, 1/2); P(A >= 5) = P(Bin >= 3) = 5/16
    assert c.tail == pytest.approx(5 / 16, abs=1e-15)


def test_janson_rejects_group_reuse():
    with pytest.raises(PreconditionError):
        janson_check([[0.5, 0.5]], [(0, 0, [0, 1]), (0, 0, [1, 0])], 0.5)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_janson_random_dependent_families(seed):
    rng = np.random.default_rng(seed)
    nb = int(rng.integers(1, 5))
    base = [rng.dirichlet(np.ones(int(rng.integers(2, 4)))) for _ in range(nb)]
    chi = int(rng.integers(1, 4))
    variables = []
    for g in range(chi):
        for j in rng.permutation(nb)[: int(rng.integers(1, nb + 1))]:
            if len(variables) < 8:
                variables.append((g, int(j), rng.random(len(base[j]))))
    for d in (0.1, 0.5, 1.0):
        assert janson_check(base, variables, d).passed


def test_berry_esseen_examples():
    base = ([-0.5, 0.5], [0.5, 0.5])
    for n in (1, 4, 16):
        c = berry_esseen_check(base, n)
        assert c.bound == pytest.approx(1 / math.sqrt(n), abs=1e-15)
        assert c.passed
    one = berry_esseen_check(base, 1)
    assert one.max_discrepancy <= 1
    assert berry_esseen_check(base, 16).bound == pytest.approx(berry_esseen_check(base, 4).bound / 2)
    with pytest.raises(PreconditionError):
        berry_esseen_check(([0, 1], [0.5, 0.5]), 3)


def test_berry_esseen_jump_is_found():
    # at n=1 the CDF jumps from 0 to 1/2 at a=-1, where Phi(-1) = 0.1587
    c = berry_esseen_check(([-0.5, 0.5], [0.5, 0.5]), 1, grid=np.linspace(-3, 3, 7))
    assert c.max_discrepancy == pytest.approx(0.5 - q_oracle(1.0), abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 21, 34, 64])
def test_berry_esseen_skewed(n):
    for base in (([-1.0, 2.0], [2 / 3, 1 / 3]), ([-0.2, 0.8], [0.8, 0.2]), ([-1.0, 0.0, 1.0], [0.25, 0.5, 0.25])):
        assert berry_esseen_check(base, n, grid=np.linspace(-4, 4, 81)).passed
