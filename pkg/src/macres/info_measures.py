"""Entropy, (conditional) mutual information, information density, Rényi
divergence and the entropy-continuity bound. All quantities are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlphabetMismatch, AxisError, PreconditionError, ZeroProbabilityError
from .prob_core import (
    FiniteDistribution,
    JointDistribution,
    normalize_axes,
    variational_distance,
)


@dataclass(frozen=True)
class DensityMoments:
    """Mean, variance and absolute third central moment of an information density."""

    mean: float
    variance: float
    third_abs_central: float


def entropy(p) -> float:
    """Shannon entropy -sum p log p with 0 log 0 = 0.

    Accepts a FiniteDistribution, a JointDistribution (joint entropy) or a
    raw weight array.
    """
    w = np.asarray(getattr(p, "weights", p), dtype=float).reshape(-1)
    w = w[w > 0]
    return float(-(w * np.log(w)).sum())


def _grouped(j: JointDistribution, a, b, given=None) -> np.ndarray:
    """Reshape ``j`` into an (|A|, |B|, |C|) array, summing out other axes.

    Multi-axis groups are flattened in C order. Without ``given`` the last
    dimension has size 1.
    """
    a = normalize_axes(a, j.ndim)
    b = normalize_axes(b, j.ndim)
    c = () if given is None else normalize_axes(given, j.ndim)
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise AxisError(f"axis groups overlap: {a}, {b}, {c}")
    keep = a + b + c
    drop = tuple(k for k in range(j.ndim) if k not in keep)
    w = j.weights.sum(axis=drop) if drop else j.weights
    remaining = sorted(keep)
    w = np.transpose(w, [remaining.index(k) for k in keep])
    sa = int(np.prod([j.shape[k] for k in a]))
    sb = int(np.prod([j.shape[k] for k in b]))
    sc = int(np.prod([j.shape[k] for k in c])) if c else 1
    return w.reshape(sa, sb, sc)


def _mi_matrix(pab: np.ndarray) -> float:
    """Mutual information of a 2-d joint weight matrix (need not be normalized to 1)."""
    total = pab.sum()
    if total <= 0:
        return 0.0
    pab = pab / total
    pa = pab.sum(axis=1, keepdims=True)
    pb = pab.sum(axis=0, keepdims=True)
    mask = pab > 0
    ratio = pab[mask] / (pa @ pb)[mask]
    return max(float((pab[mask] * np.log(ratio)).sum()), 0.0)


def mutual_information(j: JointDistribution, a=(0,), b=(1,)) -> float:
    """I(A;B) between two disjoint groups of axes of ``j``."""
    return _mi_matrix(_grouped(j, a, b)[:, :, 0])


def conditional_mutual_information(j: JointDistribution, a, b, given) -> float:
    """I(A;B|C) as the convex combination over c of I(A;B | C=c)."""
    g = _grouped(j, a, b, given)
    pc = g.sum(axis=(0, 1))
    total = 0.0
    for c in np.flatnonzero(pc > 0):
        total += pc[c] * _mi_matrix(g[:, :, c])
    return float(total)


def _density_table(j: JointDistribution, a, b, given=None):
    """Probabilities and information densities on the (A, B, C) grid.

    Density is log p(b|a,c)/p(b|c) = log p(a,b,c) p(c) / (p(a,c) p(b,c)),
    NaN off the support.
    """
    g = _grouped(j, a, b, given)
    pac = g.sum(axis=1, keepdims=True)
    pbc = g.sum(axis=0, keepdims=True)
    pc = g.sum(axis=(0, 1), keepdims=True)
    dens = np.full(g.shape, np.nan)
    mask = g > 0
    dens[mask] = np.log((g * pc)[mask] / (pac * pbc)[mask])
    return g, dens


def information_density(j: JointDistribution, point, a=(0,), b=(1,), given=None) -> float:
    """Information density i(a;b) or i(a;b|c) at a full point of ``j`` (labels)."""
    idx = j.index(point)
    a_ = normalize_axes(a, j.ndim)
    b_ = normalize_axes(b, j.ndim)
    c_ = () if given is None else normalize_axes(given, j.ndim)
    g, dens = _density_table(j, a_, b_, given)

    def flat(group):
        if not group:
            return 0
        return int(np.ravel_multi_index(tuple(idx[k] for k in group),
                                        tuple(j.shape[k] for k in group)))

    ia, ib, ic = flat(a_), flat(b_), flat(c_)
    if not g[ia, ib, ic] > 0:
        raise ZeroProbabilityError(f"point {tuple(point)} has zero probability")
    return float(dens[ia, ib, ic])


def density_moments(j: JointDistribution, a=(0,), b=(1,), given=None) -> DensityMoments:
    """Exact moments of the (conditional) information density under ``j``."""
    g, dens = _density_table(j, a, b, given)
    mask = g > 0
    p = g[mask]
    d = dens[mask]
    mean = float((p * d).sum())
    centered = d - mean
    var = float((p * centered**2).sum())
    third = float((p * np.abs(centered) ** 3).sum())
    return DensityMoments(mean, max(var, 0.0), max(third, 0.0))


def kl_divergence(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """Direct sum p log(p/q); +inf when p is not absolutely continuous wrt q."""
    if p.labels != q.labels:
        raise AlphabetMismatch("alphabets differ")
    pw, qw = p.weights, q.weights
    mask = pw > 0
    if np.any(qw[mask] == 0):
        return math.inf
    return float((pw[mask] * np.log(pw[mask] / qw[mask])).sum())


def renyi_divergence(p: FiniteDistribution, q: FiniteDistribution, alpha: float) -> float:
    """Rényi divergence of order alpha of p from q, in nats.

    Returns +inf when the divergence is infinite (support of p not covered
    by q for alpha > 1, or disjoint supports).
    """
    if p.labels != q.labels:
        raise AlphabetMismatch("alphabets differ")
    if not alpha > 0 or alpha == 1:
        raise ValueError(f"order must be positive and != 1, got {alpha}")
    pw, qw = p.weights, q.weights
    if alpha > 1 and np.any((pw > 0) & (qw == 0)):
        return math.inf
    mask = (pw > 0) & (qw > 0)
    # log-space keeps orders near 1 accurate
    logs = alpha * np.log(pw[mask]) + (1 - alpha) * np.log(qw[mask])
    if logs.size == 0:
        return math.inf
    top = logs.max()
    log_sum = top + math.log(float(np.exp(logs - top).sum()))
    return log_sum / (alpha - 1)


def entropy_difference_bound(delta: float, alphabet_size) -> float:
    """-(delta/2) log(delta / (2|A|)), valid for 0 <= delta <= 1/4.

    ``alphabet_size`` may be a huge integer (e.g. |Z|**n); only its log is used.
    delta = 0 gives the continuous extension 0.
    """
    if not 0 <= delta <= 0.25:
        raise PreconditionError(f"delta must lie in [0, 1/4], got {delta}")
    if alphabet_size < 1:
        raise ValueError("alphabet size must be at least 1")
    if delta == 0:
        return 0.0
    return -0.5 * delta * (math.log(delta) - math.log(2) - math.log(alphabet_size))


@dataclass(frozen=True)
class ContinuityCheck:
    passed: bool
    entropy_gap: float
    bound: float
    delta: float

    @property
    def slack(self) -> float:
        return self.bound - self.entropy_gap


def check_entropy_continuity(p: FiniteDistribution, q: FiniteDistribution,
                             delta: float | None = None) -> ContinuityCheck:
    """Check |H(p) - H(q)| <= bound(delta) with delta >= tv(p, q).

    By default delta is the measured distance; a larger delta up to 1/4 is
    allowed because the bound is nondecreasing on [0, 1/4].
    """
    measured = variational_distance(p, q)
    d = measured if delta is None else float(delta)
    if d < measured - 1e-15:
        raise PreconditionError(f"delta {d} is below the measured distance {measured}")
    if d > 0.25:
        raise PreconditionError(f"distance {d} exceeds 1/4")
    gap = abs(entropy(p) - entropy(q))
    bound = entropy_difference_bound(d, len(p))
    return ContinuityCheck(gap <= bound + 1e-12, gap, bound, d)
