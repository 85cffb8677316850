"""Random resolvability codebooks for the two-transmitter channel, the exact
output distributions they induce, and Monte Carlo experiments on the gap
to the target i.i.d. output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import qfunc, qfunc_inv
from .errors import PreconditionError, TheoremViolation
from .info_measures import (
    conditional_mutual_information,
    density_moments,
    mutual_information,
)
from .mac_model import Mac, joint, output_distribution, pair_rows, pair_sums, push_forward, word_histogram
from .prob_core import (
    FiniteDistribution,
    JointDistribution,
    check_budget,
    product_extension,
    tv_arrays,
)

DEFAULT_GAMMA1 = 0.05
DENSITY_TOL = 1e-9


def trial_rng(seed: int, n: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Generator for one (n, trial) cell; independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, trial, stream)))


def word_count(n: int, rate: float) -> int:
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate}")
    return max(1, int(round(math.exp(n * rate))))


@dataclass(frozen=True, eq=False)
class Codebook:
    """Indexed codewords stored as symbol indices, shape (count, n)."""

    words: np.ndarray
    alphabet: tuple
    rate: float
    n: int

    def __post_init__(self):
        w = np.array(self.words, dtype=np.intp)
        if w.ndim != 2 or w.shape[0] < 1:
            raise ValueError("codebook needs a non-empty 2-d word array")
        if w.shape[1] != self.n:
            raise ValueError(f"words have length {w.shape[1]}, expected {self.n}")
        if w.min() < 0 or w.max() >= len(self.alphabet):
            raise ValueError("codeword symbol outside the alphabet")
        w.setflags(write=False)
        object.__setattr__(self, "words", w)
        object.__setattr__(self, "alphabet", tuple(self.alphabet))

    @classmethod
    def from_labels(cls, words: Sequence[Sequence], alphabet: Sequence, rate=None) -> "Codebook":
        alphabet = tuple(alphabet)
        idx = [[alphabet.index(s) for s in w] for w in words]
        n = len(idx[0])
        r = math.log(len(idx)) / n if rate is None else rate
        return cls(np.array(idx, dtype=np.intp).reshape(len(idx), n), alphabet, r, n)

    @property
    def count(self) -> int:
        return self.words.shape[0]

    @property
    def realized_rate(self) -> float:
        return math.log(self.count) / self.n

    def labels(self) -> list[tuple]:
        return [tuple(self.alphabet[i] for i in w) for w in self.words]


def draw_words(rng: np.random.Generator, q: FiniteDistribution, count: int, n: int) -> np.ndarray:
    check_budget(count * n, "codebook symbols")
    return rng.choice(len(q), size=(count, n), p=q.weights)


def sample_codebooks(qx: FiniteDistribution, qy: FiniteDistribution, n: int,
                     R1: float, R2: float, seed: int, trial: int = 0) -> tuple[Codebook, Codebook]:
    """Two independent codebooks with i.i.d. symbols drawn per qx and qy."""
    if n < 1:
        raise ValueError("block length must be positive")
    rng = trial_rng(seed, n, trial)
    k1, k2 = word_count(n, R1), word_count(n, R2)
    c1 = Codebook(draw_words(rng, qx, k1, n), qx.labels, R1, n)
    c2 = Codebook(draw_words(rng, qy, k2, n), qy.labels, R2, n)
    return c1, c2


def _output_weights(mac: Mac, c1: Codebook, c2: Codebook) -> np.ndarray:
    if c1.n != c2.n:
        raise ValueError("codebooks have different block lengths")
    if c1.alphabet != mac.x_alphabet or c2.alphabet != mac.y_alphabet:
        raise ValueError("codebook alphabets do not match the channel inputs")
    w = push_forward(mac.transition, c1.words, c2.words)
    total = w.sum()
    if abs(total - 1) > 1e-10:
        raise TheoremViolation(f"induced output has mass {total!r}")
    return w / total


def induced_output(mac: Mac, c1: Codebook, c2: Codebook) -> JointDistribution:
    """Output distribution over Z^n when both messages are uniform."""
    w = _output_weights(mac, c1, c2)
    return JointDistribution((mac.z_alphabet,) * c1.n, w)


def _target_weights(qz: FiniteDistribution, n: int) -> np.ndarray:
    return product_extension(qz, n).weights.reshape(-1)


def resolvability_gap(mac: Mac, c1: Codebook, c2: Codebook, qz: FiniteDistribution) -> float:
    """Variational distance between the induced output and qz^n."""
    if qz.labels != mac.z_alphabet:
        raise ValueError("target distribution is not over the channel output alphabet")
    return tv_arrays(_output_weights(mac, c1, c2), _target_weights(qz, c1.n))


# -- typical / atypical decomposition -----------------------------------

@dataclass(frozen=True)
class TypicalitySplit:
    p_atyp1: float
    p_atyp2: float
    typical_excess: float
    gap: float

    @property
    def bound(self) -> float:
        return self.p_atyp1 + self.p_atyp2 + self.typical_excess


def _symbol_densities(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution):
    """Per-symbol tables i(x;z|y) and i(y;z), both indexed [x, y, z]."""
    q = mac.transition
    qz_y = np.einsum("x,xyz->yz", qx.weights, q)
    qz = np.einsum("y,yz->z", qy.weights, qz_y)
    with np.errstate(divide="ignore", invalid="ignore"):
        i1 = np.where(q > 0, np.log(q / qz_y[None, :, :]), 0.0)
        i2 = np.where(qz_y > 0, np.log(qz_y / qz[None, :]), 0.0)
    return i1, np.broadcast_to(i2[None, :, :], q.shape), qz


def typicality_split(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution,
                     c1: Codebook, c2: Codebook, epsilon: float) -> TypicalitySplit:
    """Exact atypical masses and typical excess for a codebook pair.

    Raises TheoremViolation if the gap exceeds their sum.
    """
    n = c1.n
    I1 = conditional_mutual_information(joint(mac, qx, qy), (0,), (2,), (1,))
    I2 = mutual_information(joint(mac, qx, qy), (1,), (2,))
    i1, i2, qz = _symbol_densities(mac, qx, qy)
    ux, fx = word_histogram(c1.words)
    uy, fy = word_histogram(c2.words)
    xs = np.repeat(ux, len(uy), axis=0)
    ys = np.tile(uy, (len(ux), 1))
    w = np.outer(fx, fy).reshape(-1)
    check_budget(len(w) * len(mac.z_alphabet) ** n, "typicality split enumeration")
    lik = pair_rows(mac.transition, xs, ys) * w[:, None]
    tol = DENSITY_TOL * max(1, n)
    atyp1 = pair_sums(i1, xs, ys) > n * (I1 + epsilon) + tol
    atyp2 = pair_sums(i2, xs, ys) > n * (I2 + epsilon) + tol
    p1 = float(lik[atyp1].sum())
    p2 = float(lik[atyp2].sum())
    target = _target_weights(FiniteDistribution(mac.z_alphabet, qz / qz.sum()), n)
    typ = np.where(atyp1 | atyp2, 0.0, lik).sum(axis=0)
    mask = target > 0
    excess = float((target[mask] * np.clip(typ[mask] / target[mask] - 1, 0, None)).sum())
    gap = tv_arrays(lik.sum(axis=0) / lik.sum(), target)
    out = TypicalitySplit(p1, p2, excess, gap)
    if gap > out.bound + 1e-12:
        raise TheoremViolation(f"gap {gap} exceeds decomposition bound {out.bound}")
    return out


# -- time sharing --------------------------------------------------------

@dataclass(frozen=True)
class CornerQuantities:
    ixz: float
    ixz_y: float
    iyz: float
    iyz_x: float
    ixyz: float


def corner_quantities(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution) -> CornerQuantities:
    j = joint(mac, qx, qy)
    return CornerQuantities(
        ixz=mutual_information(j, (0,), (2,)),
        ixz_y=conditional_mutual_information(j, (0,), (2,), (1,)),
        iyz=mutual_information(j, (1,), (2,)),
        iyz_x=conditional_mutual_information(j, (1,), (2,), (0,)),
        ixyz=mutual_information(j, (0, 1), (2,)),
    )


@dataclass(frozen=True)
class TimeSharingSplit:
    """Either a corner tag or lambda_hat strictly between lambda1 and lambda2."""

    tag: str
    lam1: float | None = None
    lam2: float | None = None
    lam_hat: float | None = None
    r1_at: float | None = None
    r2_at: float | None = None


def time_sharing_split(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution,
                       R1: float, R2: float) -> TimeSharingSplit:
    """Time-sharing parameter between the two corner constructions.

    R1(l) = l I(X;Z) + (1-l) I(X;Z|Y) and R2(l) = l I(Y;Z|X) + (1-l) I(Y;Z);
    lambda_hat is the midpoint of the solutions of R1(l) = R1, R2(l) = R2.
    """
    c = corner_quantities(mac, qx, qy)
    failed = []
    if not R1 > c.ixz:
        failed.append(f"R1={R1} <= I(X;Z)={c.ixz:.6g}")
    if not R2 > c.iyz:
        failed.append(f"R2={R2} <= I(Y;Z)={c.iyz:.6g}")
    if not R1 + R2 > c.ixyz:
        failed.append(f"R1+R2={R1 + R2} <= I(X,Y;Z)={c.ixyz:.6g}")
    if failed:
        raise PreconditionError("; ".join(failed))
    if R1 > c.ixz_y:
        return TimeSharingSplit("corner1")
    if R2 > c.iyz_x:
        return TimeSharingSplit("corner2")
    lam1 = (c.ixz_y - R1) / (c.ixz_y - c.ixz)
    lam2 = (R2 - c.iyz) / (c.iyz_x - c.iyz)
    lam = 0.5 * (lam1 + lam2)
    r1_at = lam * c.ixz + (1 - lam) * c.ixz_y
    r2_at = lam * c.iyz_x + (1 - lam) * c.iyz
    if not (lam1 < lam < lam2 and R1 > r1_at and R2 > r2_at):
        raise TheoremViolation(f"time sharing failed: l1={lam1}, l2={lam2}")
    return TimeSharingSplit("split", lam1, lam2, lam, r1_at, r2_at)


@dataclass(frozen=True)
class SharedBlock:
    """Finite-n realization of a time-sharing split."""

    n_first: int
    n_second: int
    rates_first: tuple
    rates_second: tuple


def time_shared_codebooks(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution, n: int,
                          R1: float, R2: float, seed: int, trial: int = 0):
    """Concatenated codebooks: the corner-1 construction on the first
    n - ceil(lambda_hat n) symbols, the corner-2 construction on the rest.

    Sub-block rates exceed their corner by the same margins R1 - R1(lambda_hat)
    and R2 - R2(lambda_hat), so the overall rates equal (R1, R2) up to
    rounding. Returns (c1, c2, SharedBlock).
    """
    split = time_sharing_split(mac, qx, qy, R1, R2)
    if split.tag != "split":
        c1, c2 = sample_codebooks(qx, qy, n, R1, R2, seed, trial)
        return c1, c2, SharedBlock(n, 0, (R1, R2), (0.0, 0.0))
    c = corner_quantities(mac, qx, qy)
    s1, s2 = R1 - split.r1_at, R2 - split.r2_at
    nb = min(n, math.ceil(split.lam_hat * n))
    na = n - nb
    ra = (c.ixz_y + s1, c.iyz + s2)
    rb = (c.ixz + s1, c.iyz_x + s2)
    rng = trial_rng(seed, n, trial, stream=1)
    parts1, parts2 = [], []
    for length, (r1, r2) in ((na, ra), (nb, rb)):
        if length == 0:
            continue
        parts1.append(draw_words(rng, qx, word_count(length, r1), length))
        parts2.append(draw_words(rng, qy, word_count(length, r2), length))

    def concat(parts):
        words = parts[0]
        for p in parts[1:]:
            words = np.hstack([np.repeat(words, len(p), axis=0), np.tile(p, (len(words), 1))])
        return words

    w1, w2 = concat(parts1), concat(parts2)
    check_budget(w1.size + w2.size, "time-shared codebooks")
    block = SharedBlock(na, nb, ra, rb)
    return Codebook(w1, qx.labels, R1, n), Codebook(w2, qy.labels, R2, n), block


# -- concentration experiments --------------------------------------------

@dataclass(frozen=True)
class GapReport:
    n: int
    gaps: tuple
    gamma1: float
    seed: int
    construction: str
    realized_rates: tuple
    split: tuple = field(default=(None, None))

    @property
    def threshold(self) -> float:
        return math.exp(-self.gamma1 * self.n)

    @property
    def exceedance(self) -> float:
        return float(np.mean(np.asarray(self.gaps) > self.threshold))

    @property
    def median(self) -> float:
        return float(np.median(self.gaps))

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.gaps, q))


def concentration_experiment(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution,
                             R1: float, R2: float, n_list: Sequence[int], trials: int,
                             gamma1: float = DEFAULT_GAMMA1, seed: int = 0,
                             construction: str = "auto") -> list[GapReport]:
    """Gap to qz^n over independently seeded codebook draws, per block length.

    ``construction`` is "iid", "time-sharing" or "auto"; auto uses time
    sharing only when the rate pair lies between the two corners.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    qz = output_distribution(mac, qx, qy)
    mode = construction
    if mode == "auto":
        try:
            mode = "time-sharing" if time_sharing_split(mac, qx, qy, R1, R2).tag == "split" else "iid"
        except PreconditionError:
            mode = "iid"
    if mode not in ("iid", "time-sharing"):
        raise ValueError(f"unknown construction {construction!r}")
    reports = []
    for n in n_list:
        gaps, realized, split = [], None, (n, 0)
        for t in range(trials):
            if mode == "iid":
                c1, c2 = sample_codebooks(qx, qy, n, R1, R2, seed, t)
            else:
                c1, c2, block = time_shared_codebooks(mac, qx, qy, n, R1, R2, seed, t)
                split = (block.n_first, block.n_second)
            gaps.append(resolvability_gap(mac, c1, c2, qz))
            realized = (c1.realized_rate, c2.realized_rate)
        reports.append(GapReport(n, tuple(gaps), gamma1, seed, mode, realized, split))
    return reports


# -- second-order rates ----------------------------------------------------

@dataclass(frozen=True)
class SecondOrderSchedule:
    n: int
    epsilon: float
    c: float
    d: float
    corner: int
    r1: float
    r2: float
    v1: float
    t1: float
    v2: float
    t2: float
    eps_tilde1: float
    eps_tilde2: float

    @property
    def gap_threshold(self) -> float:
        """Level the gap exceeds only with doubly exponentially small probability."""
        rn = math.sqrt(self.n)
        return (self.eps_tilde1 + self.eps_tilde2) * (1 + 1 / rn) + 3 / rn


def eps_tilde(epsilon: float, d: float, n: int, v: float, t: float) -> float:
    """Q(Q^-1(eps) + d log n / sqrt(n V)) + T / (V^1.5 sqrt n).

    With V = 0 the density is constant, its atypical probability is 0.
    """
    if v <= 0:
        return 0.0
    return qfunc(qfunc_inv(epsilon) + d * math.log(n) / math.sqrt(n * v)) + t / (v**1.5 * math.sqrt(n))


def second_order_schedule(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution,
                          epsilon: float, c: float, d: float, n: int,
                          corner: int = 1) -> SecondOrderSchedule:
    """Rates I + sqrt(V/n) Q^-1(eps) + c log n / n at one of the two corners."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not c > 1:
        raise ValueError(f"c must exceed 1, got {c}")
    if not 0 < d < c - 1:
        raise ValueError(f"d must lie in (0, c-1) = (0, {c - 1}), got {d}")
    if n < 2:
        raise ValueError("block length must be at least 2")
    if corner not in (1, 2):
        raise ValueError("corner must be 1 or 2")
    j = joint(mac, qx, qy)
    if corner == 1:
        m1 = density_moments(j, (0,), (2,), (1,))
        m2 = density_moments(j, (1,), (2,))
    else:
        m1 = density_moments(j, (0,), (2,))
        m2 = density_moments(j, (1,), (2,), (0,))
    qi = qfunc_inv(epsilon)
    extra = c * math.log(n) / n
    r1 = m1.mean + math.sqrt(m1.variance / n) * qi + extra
    r2 = m2.mean + math.sqrt(m2.variance / n) * qi + extra
    return SecondOrderSchedule(
        n, epsilon, c, d, corner, r1, r2,
        m1.variance, m1.third_abs_central, m2.variance, m2.third_abs_central,
        eps_tilde(epsilon, d, n, m1.variance, m1.third_abs_central),
        eps_tilde(epsilon, d, n, m2.variance, m2.third_abs_central),
    )
