"""Executable versions of the concentration inequalities used by the
resolvability proofs, and the Gaussian tail function Q = 1 - Phi.

Each checker computes the probability it bounds exactly, by convolving
finite supports, and compares it against the closed-form bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import PreconditionError
from .prob_core import check_budget

KEY_DIGITS = 12
QINV_TOL = 1e-12


# -- Gaussian tail -------------------------------------------------------

def _density(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


@lru_cache(maxsize=4096)
def qfunc(a: float) -> float:
    """Standard normal upper tail P(N > a), by adaptive quadrature."""
    a = float(a)
    if math.isnan(a):
        raise ValueError("Q is undefined at NaN")
    if a == math.inf:
        return 0.0
    if a == -math.inf:
        return 1.0
    if a < 0:
        return 1.0 - qfunc(-a)
    val, _ = integrate.quad(_density, a, math.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return min(max(val, 0.0), 0.5)


def normal_cdf(a: float) -> float:
    return qfunc(-a)


def qfunc_inv(p: float) -> float:
    """Inverse of Q on (0, 1) by bisection to an absolute tolerance of 1e-12."""
    p = float(p)
    if not 0 < p < 1:
        raise ValueError(f"Q inverse needs p in (0, 1), got {p}")
    lo, hi = -40.0, 40.0
    while hi - lo > QINV_TOL:
        mid = 0.5 * (lo + hi)
        if qfunc(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- exact sums of discrete variables -------------------------------------

def _as_variable(var) -> tuple[np.ndarray, np.ndarray]:
    values, probs = var
    v = np.asarray(values, dtype=float).reshape(-1)
    p = np.asarray(probs, dtype=float).reshape(-1)
    if v.shape != p.shape or v.size == 0:
        raise ValueError("a variable needs matching, non-empty value and probability lists")
    if p.min() < 0 or abs(p.sum() - 1) > 1e-12:
        raise ValueError("variable probabilities must be nonnegative and sum to 1")
    return v, p


def _merge(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keys = np.round(values, KEY_DIGITS)
    uniq, inv = np.unique(keys, return_inverse=True)
    out = np.zeros(uniq.size)
    np.add.at(out, inv, probs)
    return uniq, out


def sum_distribution(variables: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Exact law of the sum of independent finite variables, support sorted."""
    vals, probs = np.zeros(1), np.ones(1)
    for var in variables:
        v, p = _as_variable(var)
        check_budget(vals.size * v.size, "sum convolution")
        vals, probs = _merge((vals[:, None] + v[None, :]).ravel(),
                             (probs[:, None] * p[None, :]).ravel())
    return vals, probs


@dataclass(frozen=True)
class TailCheck:
    passed: bool
    tail: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.tail


def hoeffding_bound(mu: float, delta: float) -> float:
    """exp(-delta^2 mu / 3) for 0 < delta < 1."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    return math.exp(-delta * delta * mu / 3)


def hoeffding_check(variables: Sequence, mu: float, delta: float) -> TailCheck:
    """Exact P(A > mu(1+delta)) for a sum of independent [0,1] variables.

    ``variables`` is a list of (values, probabilities) pairs, at most 20.
    """
    if len(variables) > 20:
        raise ValueError("exact enumeration is limited to 20 variables")
    parsed = [_as_variable(v) for v in variables]
    for v, _ in parsed:
        if v.min() < 0 or v.max() > 1:
            raise ValueError("variables must take values in [0, 1]")
    mean = sum(float(v @ p) for v, p in parsed)
    if mean > mu + 1e-12:
        raise PreconditionError(f"mu={mu} is below the expected sum {mean}")
    bound = hoeffding_bound(mu, delta)
    vals, probs = sum_distribution(parsed)
    # rounding guard counts borderline points as tail mass (conservative)
    tail = float(probs[vals > mu * (1 + delta) - 1e-12].sum())
    return TailCheck(tail <= bound + 1e-12, tail, bound)


def janson_bound(n: int, chi: int, delta: float) -> float:
    """exp(-2 delta^2 / (chi n))."""
    if chi < 1 or n < 1:
        raise ValueError("need n >= 1 and chi >= 1")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return math.exp(-2 * delta * delta / (chi * n))


def janson_check(base: Sequence, variables: Sequence, delta: float) -> TailCheck:
    """Exact P(A >= E A + delta) for a dependent family.

    ``base`` lists independent finite base variables as probability vectors.
    Each entry of ``variables`` is ``(group, base_index, values)``: the
    variable equals ``values[b]`` when its base variable takes outcome b.
    Variables in the same group must use distinct base variables, which
    makes each group independent.
    """
    base_p = [np.asarray(b, dtype=float) for b in base]
    groups: dict = {}
    for group, j, values in variables:
        vals = np.asarray(values, dtype=float)
        if vals.shape != base_p[j].shape:
            raise ValueError(f"values for base variable {j} have the wrong length")
        if vals.min() < 0 or vals.max() > 1:
            raise ValueError("variables must take values in [0, 1]")
        used = groups.setdefault(group, set())
        if j in used:
            raise PreconditionError(f"group {group!r} uses base variable {j} twice")
        used.add(j)
    n = len(variables)
    chi = len(groups)
    check_budget(math.prod(b.size for b in base_p), "dependent family enumeration")
    # enumerate the base product; A is additive over base variables
    per_base = [np.zeros(b.size) for b in base_p]
    for _, j, values in variables:
        per_base[j] = per_base[j] + np.asarray(values, dtype=float)
    vals, probs = sum_distribution([(per_base[j], base_p[j]) for j in range(len(base_p))])
    mean = float(vals @ probs)
    bound = janson_bound(n, chi, delta)
    tail = float(probs[vals >= mean + delta - 1e-12].sum())
    return TailCheck(tail <= bound + 1e-12, tail, bound)


@dataclass(frozen=True)
class BerryEsseenCheck:
    passed: bool
    max_discrepancy: float
    bound: float
    at: float


def berry_esseen_check(base, n: int, grid: Sequence[float] | None = None) -> BerryEsseenCheck:
    """Compare the exact CDF of the standardized n-fold sum with Phi.

    The discrepancy is evaluated on ``grid`` and at every jump of the exact
    CDF from both sides, where the supremum is attained.
    """
    v, p = _as_variable(base)
    mean = float(v @ p)
    if abs(mean) > 1e-12:
        raise PreconditionError(f"base distribution must have mean 0, got {mean}")
    sigma = math.sqrt(float(p @ v**2))
    if sigma == 0:
        raise PreconditionError("base distribution is degenerate")
    rho = float(p @ np.abs(v) ** 3)
    bound = rho / (sigma**3 * math.sqrt(n))
    vals, probs = sum_distribution([(v, p)] * n)
    pts = vals / (sigma * math.sqrt(n))
    cdf = np.cumsum(probs)
    left = cdf - probs
    worst, where = 0.0, float(pts[0])
    for a, right_val, left_val in zip(pts, cdf, left):
        phi = normal_cdf(float(a))
        d = max(abs(right_val - phi), abs(left_val - phi))
        if d > worst:
            worst, where = d, float(a)
    for a in grid if grid is not None else ():
        k = np.searchsorted(pts, a, side="right")
        f = float(cdf[k - 1]) if k > 0 else 0.0
        d = abs(f - normal_cdf(float(a)))
        if d > worst:
            worst, where = d, float(a)
    return BerryEsseenCheck(worst <= bound + 1e-12, worst, bound, where)
