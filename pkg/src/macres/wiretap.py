"""Wiretap codebooks over a pair of channels sharing inputs: legitimate
decoding by joint typicality, and the eavesdropper's view measured by the
distinguishing gap, semantic-security advantage and leaked information.

Message pairs (m1, m2) are flattened to a single index m = m1 * M2 + m2
wherever a message set is needed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, PreconditionError, RateConditionError, TheoremViolation
from .info_measures import conditional_mutual_information, entropy, entropy_difference_bound, mutual_information
from .mac_model import Mac, WiretapMac, joint, output_distribution, pair_rows, push_forward
from .prob_core import FiniteDistribution, check_budget, product_extension, tv_arrays
from .resolvability import draw_words, trial_rng, word_count

DEFAULT_GAMMA = 0.05
DENSITY_TOL = 1e-9
DEFAULT_DECODER = (0, 0, 0, 0)


@dataclass(frozen=True, eq=False)
class WiretapCodebook:
    """Words indexed [message, randomness, position] as symbol indices."""

    words: np.ndarray
    dist: FiniteDistribution
    rate: float
    rand_rate: float
    n: int

    def __post_init__(self):
        w = np.array(self.words, dtype=np.intp)
        if w.ndim != 3 or w.shape[2] != self.n:
            raise ValueError("wiretap words must have shape (messages, randomness, n)")
        if w.min() < 0 or w.max() >= len(self.dist):
            raise ValueError("codeword symbol outside the alphabet")
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    @property
    def messages(self) -> int:
        return self.words.shape[0]

    @property
    def randomness(self) -> int:
        return self.words.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.words.reshape(-1, self.n)


def sample_wiretap_codebooks(qx: FiniteDistribution, qy: FiniteDistribution, n: int,
                             R1: float, L1: float, R2: float, L2: float, seed: int,
                             trial: int = 0) -> tuple[WiretapCodebook, WiretapCodebook]:
    rng = trial_rng(seed, n, trial, stream=2)
    m1, l1, m2, l2 = (word_count(n, r) for r in (R1, L1, R2, L2))
    w1 = draw_words(rng, qx, m1 * l1, n).reshape(m1, l1, n)
    w2 = draw_words(rng, qy, m2 * l2, n).reshape(m2, l2, n)
    return (WiretapCodebook(w1, qx, R1, L1, n), WiretapCodebook(w2, qy, R2, L2, n))


def _check_books(mac: Mac, books) -> None:
    b1, b2 = books
    if b1.n != b2.n:
        raise ValueError("codebooks differ in block length")
    if b1.dist.labels != mac.x_alphabet or b2.dist.labels != mac.y_alphabet:
        raise ValueError("codebook alphabets do not match the channel inputs")


def tap_output_distribution(wmac: WiretapMac, books, m1: int, m2: int) -> np.ndarray:
    """Tap output over Z_tap^n for one message pair, averaged over randomness."""
    _check_books(wmac.tap, books)
    b1, b2 = books
    return push_forward(wmac.tap.transition, b1.words[m1], b2.words[m2])


def tap_rows(wmac: WiretapMac, books) -> np.ndarray:
    """Tap output rows for all message pairs, shape (M1*M2, |Z_tap|^n)."""
    b1, b2 = books
    nz = len(wmac.tap.z_alphabet) ** b1.n
    check_budget(b1.messages * b2.messages * nz, "tap output rows")
    rows = np.array([tap_output_distribution(wmac, books, a, b)
                     for a in range(b1.messages) for b in range(b2.messages)])
    if np.abs(rows.sum(axis=1) - 1).max() > 1e-10:
        raise TheoremViolation("tap output row lost mass")
    return rows


# -- legitimate decoding ------------------------------------------------------

@dataclass(frozen=True)
class DecoderTables:
    """Per-symbol densities i(x;z|y), i(y;z|x), i(xy;z) and thresholds per symbol."""

    i1: np.ndarray
    i2: np.ndarray
    i3: np.ndarray
    means: tuple


def decoder_tables(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution) -> DecoderTables:
    q = mac.transition
    qz_y = np.einsum("x,xyz->yz", qx.weights, q)
    qz_x = np.einsum("y,xyz->xz", qy.weights, q)
    qz = np.einsum("x,xz->z", qx.weights, qz_x)
    with np.errstate(divide="ignore", invalid="ignore"):
        logq = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), -np.inf)
        i1 = logq - np.log(np.where(qz_y > 0, qz_y, 1.0))[None, :, :]
        i2 = logq - np.log(np.where(qz_x > 0, qz_x, 1.0))[:, None, :]
        i3 = logq - np.log(np.where(qz > 0, qz, 1.0))[None, None, :]
    j = joint(mac, qx, qy)
    means = (conditional_mutual_information(j, (0,), (2,), (1,)),
             conditional_mutual_information(j, (1,), (2,), (0,)),
             mutual_information(j, (0, 1), (2,)))
    return DecoderTables(i1, i2, i3, means)


def _typical_mask(t: DecoderTables, xw: np.ndarray, yw: np.ndarray, zs: np.ndarray,
                  epsilon: float) -> np.ndarray:
    """Boolean (Zcount, N1, N2): all three densities clear n(I - eps)."""
    n = xw.shape[1]
    ok = None
    for table, mean in zip((t.i1, t.i2, t.i3), t.means):
        s = np.zeros((zs.shape[0], xw.shape[0], yw.shape[0]))
        for k in range(n):
            s += table[xw[:, k][None, :, None], yw[:, k][None, None, :], zs[:, k][:, None, None]]
        m = s >= n * (mean - epsilon) - DENSITY_TOL * max(1, n)
        ok = m if ok is None else ok & m
    return ok


def _decode_many(t: DecoderTables, books, zs: np.ndarray, epsilon: float) -> np.ndarray:
    """Flat tuple index per output word, or -1 for the default branch."""
    b1, b2 = books
    xw, yw = b1.flat, b2.flat
    out = np.full(zs.shape[0], -1, dtype=np.intp)
    per = max(1, 2_000_000 // max(1, xw.shape[0] * yw.shape[0]))
    for s in range(0, zs.shape[0], per):
        mask = _typical_mask(t, xw, yw, zs[s:s + per], epsilon).reshape(min(per, zs.shape[0] - s), -1)
        unique = mask.sum(axis=1) == 1
        out[s:s + per][unique] = np.argmax(mask[unique], axis=1)
    return out


def _unflatten(idx: int, books) -> tuple:
    b1, b2 = books
    if idx < 0:
        return DEFAULT_DECODER
    a, b = divmod(int(idx), b2.messages * b2.randomness)
    m1, l1 = divmod(a, b1.randomness)
    m2, l2 = divmod(b, b2.randomness)
    return (m1, l1, m2, l2)


def jt_decode(mac_legit: Mac, books, epsilon: float, zword: Sequence) -> tuple:
    """Unique (m1, l1, m2, l2) jointly typical with zword, else (0, 0, 0, 0)."""
    _check_books(mac_legit, books)
    zi = np.array([[mac_legit.z_alphabet.index(s) for s in zword]], dtype=np.intp)
    t = decoder_tables(mac_legit, books[0].dist, books[1].dist)
    return _unflatten(_decode_many(t, books, zi, epsilon)[0], books)


@dataclass(frozen=True)
class ErrorEstimate:
    value: float
    half_width: float
    mode: str


def _all_words(size: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(size), repeat=n)), dtype=np.intp).reshape(-1, n)


def average_error(mac_legit: Mac, books, epsilon: float, mode: str = "exact",
                  trials: int = 1000, seed: int = 0, trial: int = 0) -> ErrorEstimate:
    """Decoding error averaged over all index tuples and the channel noise.

    ``mode="mc"`` samples (tuple, noise) pairs and reports a 95% half-width.
    """
    _check_books(mac_legit, books)
    b1, b2 = books
    n = b1.n
    t = decoder_tables(mac_legit, b1.dist, b2.dist)
    xw, yw = b1.flat, b2.flat
    nz = len(mac_legit.z_alphabet)
    tuples = xw.shape[0] * yw.shape[0]
    if mode == "exact":
        check_budget(nz**n * tuples, "exact decoding error")
        zs = _all_words(nz, n)
        # the default branch answers tuple 0, which is right when tuple 0 was sent
        dec = np.maximum(_decode_many(t, books, zs, epsilon), 0)
        xs = np.repeat(xw, yw.shape[0], axis=0)
        ys = np.tile(yw, (xw.shape[0], 1))
        lik = pair_rows(mac_legit.transition, xs, ys)  # (tuples, Z^n)
        correct = dec[None, :] == np.arange(tuples)[:, None]
        err = 1.0 - float((lik * correct).sum()) / tuples
        return ErrorEstimate(min(max(err, 0.0), 1.0), 0.0, "exact")
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    rng = trial_rng(seed, n, trial, stream=3)
    picks = rng.integers(tuples, size=trials)
    a, b = np.divmod(picks, yw.shape[0])
    zs = np.empty((trials, n), dtype=np.intp)
    for k in range(n):
        rows = mac_legit.transition[xw[a, k], yw[b, k]]
        cum = rows.cumsum(axis=1)
        zs[:, k] = (rng.random(trials)[:, None] > cum).sum(axis=1).clip(max=nz - 1)
    dec = np.maximum(_decode_many(t, books, zs, epsilon), 0)
    p = float(np.mean(dec != picks))
    return ErrorEstimate(p, 1.96 * math.sqrt(p * (1 - p) / trials), "mc")


# -- eavesdropper metrics ---------------------------------------------------

def distinguishing_security_gap(wmac: WiretapMac, books) -> float:
    """Largest variational distance between tap outputs of two message pairs."""
    rows = tap_rows(wmac, books)
    return _max_pairwise_tv(rows)


def _max_pairwise_tv(rows: np.ndarray) -> float:
    best = 0.0
    for i in range(len(rows)):
        if i + 1 < len(rows):
            d = 0.5 * np.abs(rows[i + 1:] - rows[i][None, :]).sum(axis=1)
            best = max(best, float(d.max()))
    return min(best, 1.0)


def max_distance_to_target(wmac: WiretapMac, books, qx: FiniteDistribution,
                           qy: FiniteDistribution) -> float:
    """max over message pairs of the distance to the i.i.d. tap output."""
    rows = tap_rows(wmac, books)
    target = product_extension(output_distribution(wmac.tap, qx, qy), books[0].n).weights.reshape(-1)
    return max(tv_arrays(r / r.sum(), target) for r in rows)


def set_partitions(items: Sequence) -> list:
    """All set partitions of ``items`` as lists of tuples, blocks in first-seen order."""
    items = list(items)
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in set_partitions(rest):
        out.append([(first,)] + part)
        for i in range(len(part)):
            out.append(part[:i] + [(first,) + part[i]] + part[i + 1:])
    return [sorted(p, key=min) for p in out]


def prior_search_set(k: int, grid: int = 16) -> np.ndarray:
    """Uniform priors on every non-empty subset, plus a 1/grid simplex grid if k <= 4."""
    pri = []
    for r in range(1, k + 1):
        for sub in itertools.combinations(range(k), r):
            p = np.zeros(k)
            p[list(sub)] = 1.0 / r
            pri.append(p)
    if k <= 4:
        for c in itertools.product(range(grid + 1), repeat=k - 1):
            if sum(c) <= grid:
                pri.append(np.array(list(c) + [grid - sum(c)], dtype=float) / grid)
    return np.unique(np.round(np.array(pri), 15), axis=0)


@dataclass(frozen=True)
class AdvantageCertificate:
    partition: tuple
    prior: tuple
    decoder: tuple  # block index chosen per tap output word
    guess: int
    success: float
    guess_success: float


def _partition_advantage(rows: np.ndarray, priors: np.ndarray, part) -> tuple:
    """Advantage for each prior with the posterior-argmax decoder; ties to the lowest block."""
    block_mass = np.stack([priors[:, list(g)] @ rows[list(g)] for g in part], axis=1)  # (K, B, Z)
    success = block_mass.max(axis=1).sum(axis=1)
    prior_blocks = np.stack([priors[:, list(g)].sum(axis=1) for g in part], axis=1)
    guess_success = prior_blocks.max(axis=1)
    return success - guess_success, success, guess_success, block_mass, prior_blocks


def semantic_security_advantage(wmac: WiretapMac, books, priors: np.ndarray | None = None,
                                max_messages: int = 5) -> tuple[float, AdvantageCertificate]:
    """Best adversary advantage over all partitions and the searched priors.

    A lower bound on the supremum over all priors; the certificate
    reproduces the value exactly.
    """
    rows = tap_rows(wmac, books)
    k = len(rows)
    if k > max_messages:
        raise PreconditionError(f"{k} message pairs exceed the enumeration limit of {max_messages}")
    pri = prior_search_set(k) if priors is None else np.atleast_2d(np.asarray(priors, dtype=float))
    best, cert = -math.inf, None
    for part in set_partitions(range(k)):
        adv, succ, guess, mass, pblocks = _partition_advantage(rows, pri, part)
        i = int(np.argmax(adv))
        if adv[i] > best + 1e-15:
            best = float(adv[i])
            cert = AdvantageCertificate(
                tuple(tuple(g) for g in part), tuple(pri[i]),
                tuple(int(b) for b in mass[i].argmax(axis=0)), int(np.argmax(pblocks[i])),
                float(succ[i]), float(guess[i]))
    return max(best, 0.0), cert


def identification_attack_check(wmac: WiretapMac, books, m: int, m_hat: int,
                                decoder) -> tuple[float, float, float]:
    """Error pair of a binary identification decoder and its slack.

    ``decoder`` flags, per tap output word (flat index), whether the decoder
    answers {m}. Returns (E1, E2, E1 + E2 - (1 - 2 delta)) where delta is the
    best advantage for the prior uniform on {m, m_hat} and the partition
    {{m}, rest}; the slack is never negative.
    """
    if m == m_hat:
        raise ValueError("m and m_hat must differ")
    rows = tap_rows(wmac, books)
    says_m = np.asarray(decoder, dtype=bool).reshape(-1)
    if says_m.size != rows.shape[1]:
        raise ValueError("decoder must give one answer per tap output word")
    e1 = float(rows[m][~says_m].sum())
    e2 = float(rows[m_hat][says_m].sum())
    prior = np.zeros((1, len(rows)))
    prior[0, [m, m_hat]] = 0.5
    rest = tuple(i for i in range(len(rows)) if i != m)
    delta = float(_partition_advantage(rows, prior, [(m,), rest])[0][0])
    slack = e1 + e2 - (1 - 2 * delta)
    if slack < -1e-12:
        raise TheoremViolation(f"E1 + E2 = {e1 + e2} below 1 - 2*delta = {1 - 2 * delta}")
    return e1, e2, slack


@dataclass(frozen=True)
class LeakageCheck:
    mutual_information: float
    delta: float
    bound: float | None
    passed: bool | None


def leakage_check(wmac: WiretapMac, books, prior=None) -> LeakageCheck:
    """I(M; tap output) against the entropy-continuity bound.

    delta is the prior-average distance to the output row of lowest entropy;
    the bound applies only when delta < 1/4 (otherwise bound is None).
    """
    rows = tap_rows(wmac, books)
    k = len(rows)
    p = np.full(k, 1.0 / k) if prior is None else np.asarray(prior, dtype=float)
    mix = p @ rows
    cond = np.array([entropy(r) for r in rows])
    mi = max(entropy(mix) - float(p @ cond), 0.0)
    low = int(np.argmin(cond))
    delta = float(sum(pi * 0.5 * np.abs(r - rows[low]).sum() for pi, r in zip(p, rows)))
    if not delta < 0.25:
        return LeakageCheck(mi, delta, None, None)
    size = len(wmac.tap.z_alphabet) ** books[0].n
    bound = entropy_difference_bound(delta, size)
    ok = mi <= bound + 1e-12
    if not ok:
        raise TheoremViolation(f"leakage {mi} exceeds bound {bound}")
    return LeakageCheck(mi, delta, bound, ok)


# -- rate selection -----------------------------------------------------------

@dataclass(frozen=True)
class WiretapQuantities:
    legit_x_given_y: float
    legit_y_given_x: float
    legit_xy: float
    tap_x: float
    tap_y: float
    tap_xy: float


def _single(mac: Mac, qx: np.ndarray, qy: np.ndarray) -> np.ndarray:
    j = joint(mac, FiniteDistribution(mac.x_alphabet, qx), FiniteDistribution(mac.y_alphabet, qy))
    return np.array([
        conditional_mutual_information(j, (0,), (2,), (1,)),
        conditional_mutual_information(j, (1,), (2,), (0,)),
        mutual_information(j, (0, 1), (2,)),
        mutual_information(j, (0,), (2,)),
        mutual_information(j, (1,), (2,)),
    ])


def wiretap_quantities(wmac: WiretapMac, qx: FiniteDistribution | None = None,
                       qy: FiniteDistribution | None = None, witness=None) -> WiretapQuantities:
    """Conditional MIs given V; constant V unless a RegionWitness is supplied."""
    if witness is None:
        pv, xs, ys = np.ones(1), [qx.weights], [qy.weights]
    else:
        pv, xs, ys = witness.p_v, witness.qx_v, witness.qy_v
    legit = sum(p * _single(wmac.legit, a, b) for p, a, b in zip(pv, xs, ys))
    tap = sum(p * _single(wmac.tap, a, b) for p, a, b in zip(pv, xs, ys))
    return WiretapQuantities(float(legit[0]), float(legit[1]), float(legit[2]),
                             float(tap[3]), float(tap[4]), float(tap[2]))


@dataclass(frozen=True)
class RandomnessRates:
    L1: float
    L2: float
    interval1: tuple
    interval2: tuple


def rate_conditions(q: WiretapQuantities, R1: float, R2: float) -> list[str]:
    """Names of the violated secrecy-rate conditions (empty if all hold)."""
    bad = []
    if not q.tap_x < q.legit_x_given_y - R1:
        bad.append(f"x condition: I(X;Zt|V)={q.tap_x:.6g} >= I(X;Zl|Y,V)-R1={q.legit_x_given_y - R1:.6g}")
    if not q.tap_y < q.legit_y_given_x - R2:
        bad.append(f"y condition: I(Y;Zt|V)={q.tap_y:.6g} >= I(Y;Zl|X,V)-R2={q.legit_y_given_x - R2:.6g}")
    if not q.tap_xy < q.legit_xy - (R1 + R2):
        bad.append(f"sum condition: I(XY;Zt|V)={q.tap_xy:.6g} >= I(XY;Zl|V)-R1-R2={q.legit_xy - R1 - R2:.6g}")
    return bad


def choose_randomness_rates(q: WiretapQuantities, R1: float, R2: float) -> RandomnessRates:
    """Midpoints of the two randomness-rate intervals; checks the sandwich chains."""
    bad = rate_conditions(q, R1, R2)
    if bad:
        raise RateConditionError("; ".join(bad), violated=[b.split(':')[0] for b in bad])
    lo1 = max(q.tap_x, -q.legit_y_given_x + R2 + q.tap_xy)
    hi1 = min(q.legit_x_given_y - R1, -q.tap_y + q.legit_xy - (R1 + R2))
    L1 = 0.5 * (lo1 + hi1)
    lo2 = max(q.tap_xy - L1, q.tap_y)
    hi2 = min(q.legit_y_given_x - R2, q.legit_xy - L1 - (R1 + R2))
    L2 = 0.5 * (lo2 + hi2)
    chains = (
        q.tap_x < L1 < q.legit_x_given_y - R1,
        q.tap_y < L2 < q.legit_y_given_x - R2,
        q.tap_xy < L1 + L2 < q.legit_xy - (R1 + R2),
    )
    if not (lo1 < hi1 and lo2 < hi2 and all(chains)):
        raise TheoremViolation(f"randomness rates violate a sandwich chain: {chains}")
    return RandomnessRates(L1, L2, (lo1, hi1), (lo2, hi2))


# -- end-to-end experiment --------------------------------------------------

@dataclass(frozen=True)
class SecurityReport:
    n: int
    trial: int
    ds_gap: float
    target_gap: float
    ss_advantage: float | None
    certificate: AdvantageCertificate | None
    decode_error: float
    error_half_width: float
    bad_security: bool
    bad_decoding: bool

    def __post_init__(self):
        if self.ss_advantage is not None and not self.ss_advantage <= self.ds_gap + 1e-12:
            raise TheoremViolation(f"advantage {self.ss_advantage} exceeds ds gap {self.ds_gap}")


@dataclass(frozen=True)
class SecrecyRun:
    n: int
    L1: float
    L2: float
    epsilon: float
    counts: tuple  # (M1, L1 count, M2, L2 count)
    reports: tuple = field(default=())

    @property
    def median_ds_gap(self) -> float:
        return float(np.median([r.ds_gap for r in self.reports]))

    @property
    def bad_fraction(self) -> float:
        return float(np.mean([r.bad_security or r.bad_decoding for r in self.reports]))


def default_epsilon(q: WiretapQuantities, R1, R2, L1, L2) -> float:
    """Half the smallest decoding margin."""
    return 0.5 * min(q.legit_x_given_y - R1 - L1, q.legit_y_given_x - R2 - L2,
                     q.legit_xy - R1 - R2 - L1 - L2)


def secrecy_experiment(wmac: WiretapMac, qx: FiniteDistribution, qy: FiniteDistribution,
                       R1: float, R2: float, n_list: Sequence[int], trials: int,
                       epsilon: float | None = None, seed: int = 0,
                       gamma: float = DEFAULT_GAMMA, mc_trials: int = 2000) -> list[SecrecyRun]:
    """Sample wiretap codebooks per (n, trial) and measure both receivers.

    A pair is flagged bad when its distance to the i.i.d. tap output or its
    decoding error exceeds exp(-gamma n). Decoding error is exact when the
    enumeration fits the budget and Monte Carlo otherwise.
    """
    q = wiretap_quantities(wmac, qx, qy)
    rates = choose_randomness_rates(q, R1, R2)
    eps = default_epsilon(q, R1, R2, rates.L1, rates.L2) if epsilon is None else epsilon
    runs = []
    for n in n_list:
        reports = []
        counts = None
        for t in range(trials):
            books = sample_wiretap_codebooks(qx, qy, n, R1, rates.L1, R2, rates.L2, seed, t)
            counts = (books[0].messages, books[0].randomness, books[1].messages, books[1].randomness)
            ds = distinguishing_security_gap(wmac, books)
            tgt = max_distance_to_target(wmac, books, qx, qy)
            ss, cert = (None, None)
            if counts[0] * counts[2] <= 4:
                ss, cert = semantic_security_advantage(wmac, books)
            tuples = counts[0] * counts[1] * counts[2] * counts[3]
            try:
                check_budget(len(wmac.legit.z_alphabet) ** n * tuples, "exact decoding error")
                err = average_error(wmac.legit, books, eps, "exact")
            except BudgetExceeded:
                err = average_error(wmac.legit, books, eps, "mc", mc_trials, seed, t)
            thr = math.exp(-gamma * n)
            reports.append(SecurityReport(n, t, ds, tgt, ss, cert, err.value, err.half_width,
                                          tgt > thr, err.value > thr))
        runs.append(SecrecyRun(n, rates.L1, rates.L2, eps, counts, tuple(reports)))
    return runs
