import math

import numpy as np
import pytest
from hypothesis import given, settings

from macres.errors import PreconditionError
from macres.info_measures import conditional_mutual_information
from macres.mac_model import Mac, output_distribution
from macres.prob_core import FiniteDistribution
from macres.rate_region import (
    convexity_probe,
    converse_witness,
    corner_points,
    make_witness,
    mix_witnesses,
    reduce_auxiliary,
    region_membership,
    verify_witness,
)
from macres.resolvability import Codebook, sample_codebooks

from conftest import random_dist, random_mac, seeds

F = FiniteDistribution.from_weights
LN2 = math.log(2)
QZ_ADDER = F([0.25, 0.5, 0.25])


def test_corner_points(adder, u2):
    a, b = corner_points(adder, u2, u2)
    assert a == pytest.approx((LN2, 0.5 * LN2), abs=1e-12)
    assert b == pytest.approx((0.5 * LN2, LN2), abs=1e-12)
    flat = Mac((0, 1), (0, 1), (0, 1), np.full((2, 2, 2), 0.5))
    a, b = corner_points(flat, u2, u2)
    assert a + b == pytest.approx((0, 0, 0, 0), abs=1e-15)
    zx = Mac((0, 1), (0, 1), (0, 1), [[[1, 0], [1, 0]], [[0, 1], [0, 1]]])
    qx = F([0.3, 0.7])
    (r1, r2), _ = corner_points(zx, qx, u2)
    assert r1 == pytest.approx(-(0.3 * math.log(0.3) + 0.7 * math.log(0.7)), abs=1e-12)
    assert r2 == pytest.approx(0, abs=1e-15)


def test_membership_examples(adder):
    res = region_membership(adder, QZ_ADDER, 0.75, 0.45)
    assert res.status == "certified"
    assert res.witness.support == 1
    np.testing.assert_allclose(res.witness.qx_v[0], [0.5, 0.5], atol=1e-6)
    assert region_membership(adder, QZ_ADDER, 2.0, 2.0).status == "certified"
    low = region_membership(adder, QZ_ADDER, 0.2, 0.2)
    assert low.status == "unknown" and low.witness is None


def test_membership_is_monotone(adder):
    res = region_membership(adder, QZ_ADDER, 0.75, 0.45)
    for a, b in ((0, 0.1), (0.3, 0), (1.0, 2.0)):
        assert verify_witness(adder, res.witness, QZ_ADDER, 0.75 + a, 0.45 + b) > 0


@pytest.mark.parametrize("name,rates", [("noisy223.json", (0.6, 0.6)), ("noisy223.json", (1.0, 1.0))])
def test_certificates_recheck(name, rates):
    from macres import load_channel
    m = load_channel(name)
    u = FiniteDistribution.uniform((0, 1))
    qz = output_distribution(m, u, u)
    res = region_membership(m, qz, *rates)
    if res.status == "certified":
        assert verify_witness(m, res.witness, qz, *rates) > 1e-4


def test_converse_perfect_n1(adder):
    c = Codebook.from_labels([(0,), (1,)], (0, 1))
    rep = converse_witness(adder, c, c, QZ_ADDER)
    assert rep.delta == 0 and rep.correction == 0
    assert rep.witness.i_xyz == pytest.approx(1.039721, abs=1e-6)
    assert rep.rates[0] + rep.rates[1] == pytest.approx(1.386294, abs=1e-6)
    assert min(rep.slacks) >= 0


def test_converse_rejects_large_gap(adder):
    c = Codebook.from_labels([(0, 0)], (0, 1))
    with pytest.raises(PreconditionError):
        converse_witness(adder, c, c, QZ_ADDER)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_converse_inequalities_on_sampled_books(seed):
    rng = np.random.default_rng(seed)
    m = random_mac(rng)
    u = FiniteDistribution.uniform((0, 1))
    qz = output_distribution(m, u, u)
    n = int(rng.integers(1, 5))
    c1, c2 = sample_codebooks(u, u, n, rng.uniform(0.3, 1.2), rng.uniform(0.3, 1.2), seed=seed)
    try:
        rep = converse_witness(m, c1, c2, qz)
    except PreconditionError:
        return
    assert min(rep.slacks) >= -1e-12
    assert rep.output_distance <= rep.delta + 1e-12
    # the time-mixed witness recomputed on the full joint
    j = rep.witness.full_joint(m)
    assert conditional_mutual_information(j, (1, 2), (3,), (0,)) == pytest.approx(rep.witness.i_xyz, abs=1e-10)


def test_reduce_single_point_unchanged(adder):
    w = make_witness(adder, [1.0], [[0.5, 0.5]], [[0.5, 0.5]])
    r = reduce_auxiliary(adder, w)
    assert r.support == 1
    np.testing.assert_allclose(r.rows, w.rows)


def test_reduce_duplicates(noisy):
    a, b = [0.3, 0.7], [0.6, 0.4]
    qx = [a, b] * 4
    qy = [b, a] * 4
    w = make_witness(noisy, np.full(8, 1 / 8), qx, qy)
    r = reduce_auxiliary(noisy, w)
    assert r.support <= 2
    np.testing.assert_allclose(r.p_v @ r.functionals(), w.p_v @ w.functionals(), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_reduce_random_witness(seed):
    rng = np.random.default_rng(seed)
    m = random_mac(rng)
    w = make_witness(m, rng.dirichlet(np.ones(10)), rng.dirichlet(np.ones(2), 10), rng.dirichlet(np.ones(2), 10))
    r = reduce_auxiliary(m, w)
    assert r.support <= len(m.z_alphabet) + 3
    np.testing.assert_allclose(r.p_v @ r.functionals(), w.p_v @ w.functionals(), atol=1e-9)
    assert (r.i_xyz, r.i_xz, r.i_yz) == pytest.approx((w.i_xyz, w.i_xz, w.i_yz), abs=1e-9)


def test_mix_identical_witness(adder):
    res = region_membership(adder, QZ_ADDER, 0.75, 0.45)
    mixed = mix_witnesses(adder, res.witness, res.witness, 0.3)
    assert (mixed.i_xyz, mixed.i_xz, mixed.i_yz) == pytest.approx(
        (res.witness.i_xyz, res.witness.i_xz, res.witness.i_yz), abs=1e-12)


def test_convexity_adder_corners(adder):
    pairs = [(LN2 + 0.01, 0.5 * LN2 + 0.01), (0.5 * LN2 + 0.01, LN2 + 0.01)]
    rep = convexity_probe(adder, QZ_ADDER, pairs, lambdas=(0.5,))
    assert rep.all_certified
    assert rep.checks[0][1] == pytest.approx((0.75 * LN2 + 0.01,) * 2)


def test_convexity_random_certified_pairs(noisy):
    u = FiniteDistribution.uniform((0, 1))
    qz = output_distribution(noisy, u, u)
    rep = convexity_probe(noisy, qz, [(0.6, 0.6), (1.2, 0.5), (0.5, 1.2)])
    assert rep.all_certified and len(rep.checks) == 9


def test_convexity_requires_certified_pairs(adder):
    with pytest.raises(PreconditionError):
        convexity_probe(adder, QZ_ADDER, [(0.2, 0.2)])
