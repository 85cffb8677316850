import numpy as np
import pytest
from hypothesis import given, settings

from macres.errors import AlphabetMismatch, AxisError, BudgetExceeded, ProbabilityError
from macres.mac_model import joint
from macres.prob_core import (
    FiniteDistribution,
    JointDistribution,
    enumeration_budget,
    marginalize,
    product,
    product_extension,
    variational_distance,
)

from conftest import random_dist, seeds

F = FiniteDistribution.from_weights


def test_distribution_validation():
    with pytest.raises(ProbabilityError):
        F([0.5, 0.6])
    with pytest.raises(ProbabilityError):
        F([1.5, -0.5])
    with pytest.raises(ProbabilityError):
        FiniteDistribution(("a", "a"), [0.5, 0.5])
    with pytest.raises(ProbabilityError):
        FiniteDistribution(("a",), [0.5, 0.5])
    assert F([0.5, 0.5 + 5e-13]).weights.sum() == pytest.approx(1)


def test_weights_are_frozen():
    p = F([0.5, 0.5])
    with pytest.raises(ValueError):
        p.weights[0] = 1.0


@pytest.mark.parametrize("p,q,expected", [
    ([0.25, 0.5, 0.25], [0.25, 0.5, 0.25], 0.0),
    ([1, 0], [0, 1], 1.0),
    ([0.5, 0.5, 0], [0.25, 0.5, 0.25], 0.25),
])
def test_variational_distance_examples(p, q, expected):
    assert variational_distance(F(p), F(q)) == pytest.approx(expected, abs=1e-15)


def test_variational_distance_alphabet_mismatch():
    with pytest.raises(AlphabetMismatch):
        variational_distance(F([0.5, 0.5]), FiniteDistribution(("a", "b"), [0.5, 0.5]))


def test_tv_formulas_agree_on_1000_pairs():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        k = int(rng.integers(1, 9))
        p, q = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
        half = 0.5 * np.abs(p - q).sum()
        pos = np.clip(p - q, 0, None).sum()
        assert abs(half - pos) <= 1e-12
        assert variational_distance(F(p), F(q)) == pytest.approx(half, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_tv_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 7))
    p, q, r = (random_dist(rng, k) for _ in range(3))
    assert variational_distance(p, q) == variational_distance(q, p)
    assert variational_distance(p, p) <= 1e-12
    assert variational_distance(p, r) <= variational_distance(p, q) + variational_distance(q, r) + 1e-12
    assert 0 <= variational_distance(p, q) <= 1


def test_product_extension_examples():
    pm = product_extension(F([1, 0]), 3)
    assert pm.prob((0, 0, 0)) == 1.0
    u = product_extension(F([0.5, 0.5]), 2)
    np.testing.assert_allclose(u.weights.reshape(-1), 0.25)
    e = product_extension(F([0.25, 0.75]), 2)
    np.testing.assert_allclose(e.weights.reshape(-1), [0.0625, 0.1875, 0.1875, 0.5625], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_extension_marginals_recover_base(seed):
    rng = np.random.default_rng(seed)
    p = random_dist(rng, int(rng.integers(1, 5)))
    n = int(rng.integers(1, 5))
    ext = product_extension(p, n)
    for k in range(n):
        np.testing.assert_allclose(marginalize(ext, (k,)).weights, p.weights, atol=1e-12)


def test_budget(monkeypatch):
    monkeypatch.setenv("MACRES_ENUM_BUDGET", "100")
    assert enumeration_budget() == 100
    with pytest.raises(BudgetExceeded):
        product_extension(F([0.5, 0.5]), 7)
    monkeypatch.setenv("MACRES_ENUM_BUDGET", "nonsense")
    with pytest.raises(ValueError):
        enumeration_budget()
    monkeypatch.delenv("MACRES_ENUM_BUDGET")
    assert enumeration_budget() == 10**7


def test_marginalize_examples(adder, u2):
    p, q = F([0.2, 0.8]), F([0.1, 0.3, 0.6])
    np.testing.assert_allclose(marginalize(product(p, q), (0,)).weights, p.weights)
    uu = product(u2, u2)
    for k in (0, 1):
        np.testing.assert_allclose(marginalize(uu, k).weights, [0.5, 0.5])
    np.testing.assert_allclose(marginalize(joint(adder, u2, u2), (2,)).weights, [0.25, 0.5, 0.25])


def test_marginalize_keeps_requested_order():
    p, q = F([0.2, 0.8]), F([0.1, 0.3, 0.6])
    j = product(p, q)
    assert marginalize(j, (1, 0)).shape == (3, 2)
    np.testing.assert_allclose(marginalize(j, (1, 0)).weights, j.weights.T)


def test_marginalize_errors():
    j = product(F([0.5, 0.5]), F([0.5, 0.5]))
    with pytest.raises(AxisError):
        marginalize(j, ())
    with pytest.raises(AxisError):
        marginalize(j, (2,))
    with pytest.raises(AxisError):
        marginalize(j, (0, 0))


def test_joint_lookup_and_flat():
    j = product(FiniteDistribution(("a", "b"), [0.25, 0.75]), F([0.5, 0.5]))
    assert j.prob(("b", 1)) == pytest.approx(0.375)
    assert j.marginal(0).labels == ("a", "b")
    assert j.flat().labels[1] == ("a", 1)
    with pytest.raises(AlphabetMismatch):
        j.prob(("c", 0))
    with pytest.raises(AxisError):
        j.prob(("a",))
    with pytest.raises(ProbabilityError):
        JointDistribution(((0, 1),), [0.5, 0.6])
