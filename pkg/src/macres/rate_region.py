"""Rate-region certificates, corner points, the single-letter converse
witness and the auxiliary-alphabet reduction.

Membership is certified on a discretized search space only. A failed
search returns "unknown"; non-membership is never claimed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import PreconditionError, ReductionError, TheoremViolation
from .info_measures import conditional_mutual_information
from .mac_model import Mac
from .prob_core import FiniteDistribution, JointDistribution, tv_arrays
from .resolvability import Codebook, corner_quantities, resolvability_gap

FUNCTIONAL_TOL = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    resolution: int = 64
    output_tol: float = 1e-6
    margin: float = 1e-4
    max_support: int = 3


def _mi_rows(mac: Mac, qx: np.ndarray, qy: np.ndarray) -> tuple[float, float, float, np.ndarray]:
    """(I(X;Z), I(Y;Z), I(X,Y;Z), q_Z) for one pair of input distributions."""
    j = qx[:, None, None] * qy[None, :, None] * mac.transition
    j = j / j.sum()
    qz = j.sum(axis=(0, 1))

    def mi(pab):
        pa = pab.sum(axis=1, keepdims=True)
        pb = pab.sum(axis=0, keepdims=True)
        m = pab > 0
        return max(float((pab[m] * np.log(pab[m] / (pa @ pb)[m])).sum()), 0.0)

    nz = len(mac.z_alphabet)
    return mi(j.sum(axis=1)), mi(j.sum(axis=0)), mi(j.reshape(-1, nz)), qz


@dataclass(frozen=True, eq=False)
class RegionWitness:
    """Auxiliary p_V with per-v input distributions and their averaged MIs."""

    p_v: np.ndarray
    qx_v: np.ndarray
    qy_v: np.ndarray
    i_xyz: float
    i_xz: float
    i_yz: float
    rows: np.ndarray
    output_error: float = 0.0

    @property
    def support(self) -> int:
        return int(np.count_nonzero(self.p_v > 0))

    @property
    def outputs(self) -> np.ndarray:
        return self.rows[:, 3:]

    def functionals(self) -> np.ndarray:
        """Per-v rows (I(X;Z), I(Y;Z), I(X,Y;Z), q_Z(.|v)); shape (|V|, 3+|Z|)."""
        return self.rows

    def full_joint(self, mac: Mac) -> JointDistribution:
        w = (self.p_v[:, None, None, None] * self.qx_v[:, :, None, None]
             * self.qy_v[:, None, :, None] * mac.transition[None])
        return JointDistribution((tuple(range(len(self.p_v))), mac.x_alphabet,
                                  mac.y_alphabet, mac.z_alphabet), w / w.sum())


def make_witness(mac: Mac, p_v, qx_v, qy_v, qz: FiniteDistribution | None = None) -> RegionWitness:
    p_v = np.asarray(p_v, dtype=float)
    qx_v = np.atleast_2d(np.asarray(qx_v, dtype=float))
    qy_v = np.atleast_2d(np.asarray(qy_v, dtype=float))
    if not (len(p_v) == len(qx_v) == len(qy_v)):
        raise ValueError("p_V and the conditional kernels disagree on |V|")
    if abs(p_v.sum() - 1) > 1e-12 or p_v.min() < 0:
        raise ValueError("p_V is not a distribution")
    rows = []
    for a, b in zip(qx_v, qy_v):
        ix, iy, ixy, out = _mi_rows(mac, a, b)
        rows.append(np.concatenate([[ix, iy, ixy], out]))
    rows = np.array(rows)
    avg = p_v @ rows[:, :3]
    err = 0.0
    if qz is not None:
        live = p_v > 0
        err = float(np.abs(rows[live, 3:] - qz.weights[None, :]).max())
    return RegionWitness(p_v, qx_v, qy_v, float(avg[2]), float(avg[0]), float(avg[1]), rows, err)


def corner_points(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution):
    """((I(X;Z|Y), I(Y;Z)), (I(X;Z), I(Y;Z|X)))."""
    c = corner_quantities(mac, qx, qy)
    return (c.ixz_y, c.iyz), (c.ixz, c.iyz_x)


# -- membership search ---------------------------------------------------

def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All points of the k-simplex with coordinates in multiples of 1/resolution."""
    pts = [c for c in itertools.product(range(resolution + 1), repeat=k - 1) if sum(c) <= resolution]
    return np.array([list(c) + [resolution - sum(c)] for c in pts], dtype=float) / resolution


def _solve_side(a: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Nonnegative q with a @ q ~ target and sum q = 1."""
    big = 1e3
    lhs = np.vstack([a, big * np.ones(a.shape[1])])
    rhs = np.concatenate([target, [big]])
    q, _ = nnls(lhs, rhs)
    s = q.sum()
    return q / s if s > 0 else q


def feasible_pairs(mac: Mac, qz: FiniteDistribution, config: SearchConfig = SearchConfig()):
    """Input pairs (qx, qy) on or solved from the grid that reproduce qz."""
    t = mac.transition
    found = {}
    for side in (0, 1):
        grid = simplex_grid(t.shape[side], config.resolution)
        for g in grid:
            if side == 0:
                a = np.einsum("x,xyz->zy", g, t)
                other = _solve_side(a, qz.weights)
                qx, qy = g, other
            else:
                a = np.einsum("y,xyz->zx", g, t)
                other = _solve_side(a, qz.weights)
                qx, qy = other, g
            out = np.einsum("x,y,xyz->z", qx, qy, t)
            err = float(np.abs(out - qz.weights).max())
            if err <= config.output_tol:
                key = (tuple(np.round(qx, 12)), tuple(np.round(qy, 12)))
                found.setdefault(key, (qx, qy))
    return list(found.values())


@dataclass(frozen=True)
class MembershipResult:
    status: str  # "certified" or "unknown"
    witness: RegionWitness | None
    margin: float | None
    rates: tuple
    candidates: int = 0


def verify_witness(mac: Mac, w: RegionWitness, qz: FiniteDistribution, R1: float, R2: float,
                   config: SearchConfig = SearchConfig()) -> float:
    """Recompute everything on the full (V,X,Y,Z) joint; return the smallest margin.

    Raises TheoremViolation if the output constraint or a margin fails.
    """
    j = w.full_joint(mac)
    i_xz = conditional_mutual_information(j, (1,), (3,), (0,))
    i_yz = conditional_mutual_information(j, (2,), (3,), (0,))
    i_xyz = conditional_mutual_information(j, (1, 2), (3,), (0,))
    pv = j.weights.sum(axis=(1, 2, 3))
    for v in np.flatnonzero(pv > 0):
        out = j.weights[v].sum(axis=(0, 1)) / pv[v]
        err = float(np.abs(out - qz.weights).max())
        if err > config.output_tol:
            raise TheoremViolation(f"v={v}: output misses q_Z by {err:.3g}")
    m = min(R1 - i_xz, R2 - i_yz, R1 + R2 - i_xyz)
    if m <= config.margin:
        raise TheoremViolation(f"smallest margin {m:.3g} is not above {config.margin}")
    return m


def region_membership(mac: Mac, qz: FiniteDistribution, R1: float, R2: float,
                      config: SearchConfig = SearchConfig()) -> MembershipResult:
    """Search for a witness with strict margins; "unknown" if none is found."""
    pairs = feasible_pairs(mac, qz, config)
    if not pairs:
        return MembershipResult("unknown", None, None, (R1, R2), 0)
    f = np.array([_mi_rows(mac, a, b)[:3] for a, b in pairs])  # columns I_X, I_Y, I_XY
    rates = np.array([R1, R2, R1 + R2])
    k = len(pairs)
    # minimize t subject to f_j . w - R_j <= t, sum w = 1, w >= 0
    c = np.zeros(k + 1)
    c[-1] = 1.0
    a_ub = np.hstack([f.T, -np.ones((3, 1))])
    a_eq = np.hstack([np.ones((1, k)), np.zeros((1, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=rates, A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0, None)] * k + [(None, None)], method="highs-ds")
    if res.status != 0 or not -res.x[-1] > config.margin:
        return MembershipResult("unknown", None, None if res.status else -res.x[-1], (R1, R2), k)
    w = np.clip(res.x[:k], 0, None)
    live = np.flatnonzero(w > 1e-12)
    if len(live) > config.max_support:
        live = live[np.argsort(-w[live])][: config.max_support]
    p_v = w[live] / w[live].sum()
    wit = make_witness(mac, p_v, [pairs[i][0] for i in live], [pairs[i][1] for i in live], qz)
    try:
        m = verify_witness(mac, wit, qz, R1, R2, config)
    except TheoremViolation:
        return MembershipResult("unknown", None, None, (R1, R2), k)
    return MembershipResult("certified", wit, m, (R1, R2), k)


# -- converse ------------------------------------------------------------

@dataclass(frozen=True)
class ConverseReport:
    witness: RegionWitness
    delta: float
    correction: float
    rates: tuple
    output_distance: float

    @property
    def slacks(self) -> tuple:
        """Rate minus (MI + correction) for the sum, X and Y inequalities."""
        r1, r2 = self.rates
        w, c = self.witness, self.correction
        return (r1 + r2 - (w.i_xyz + c), r1 - (w.i_xz + c), r2 - (w.i_yz + c))


def _delta_term(delta: float, nz: int) -> float:
    return 0.0 if delta == 0 else delta * math.log(delta / (2 * nz))


def converse_witness(mac: Mac, c1: Codebook, c2: Codebook, qz: FiniteDistribution,
                     delta: float | None = None) -> ConverseReport:
    """Time-mixed single-letter witness for a codebook pair.

    V is uniform over positions; X_v, Y_v have the codebooks' empirical
    per-position marginals. Raises TheoremViolation if an inequality fails.
    """
    gap = resolvability_gap(mac, c1, c2, qz)
    d = gap if delta is None else float(delta)
    if d < gap - 1e-15:
        raise PreconditionError(f"delta {d} is below the measured gap {gap}")
    if d > 0.25:
        raise PreconditionError(f"gap {d:.6g} exceeds 1/4")
    n = c1.n
    nx, ny = len(mac.x_alphabet), len(mac.y_alphabet)
    qx_v = np.stack([np.bincount(c1.words[:, k], minlength=nx) / c1.count for k in range(n)])
    qy_v = np.stack([np.bincount(c2.words[:, k], minlength=ny) / c2.count for k in range(n)])
    w = make_witness(mac, np.full(n, 1.0 / n), qx_v, qy_v)
    p_zhat = w.outputs.mean(axis=0)
    dist = tv_arrays(p_zhat / p_zhat.sum(), qz.weights)
    rep = ConverseReport(w, d, _delta_term(d, len(mac.z_alphabet)),
                         (c1.realized_rate, c2.realized_rate), dist)
    bad = [name for name, s in zip(("sum", "x", "y"), rep.slacks) if s < -1e-12]
    if bad or dist > d + 1e-12:
        raise TheoremViolation(f"converse inequalities fail: {bad or 'output distance'}")
    return rep


# -- cardinality reduction --------------------------------------------------

def _merge_duplicates(mac: Mac, w: RegionWitness) -> RegionWitness:
    keys, mass, qx, qy = [], [], [], []
    for p, a, b in zip(w.p_v, w.qx_v, w.qy_v):
        if p <= 0:
            continue
        key = (tuple(np.round(a, 14)), tuple(np.round(b, 14)))
        if key in keys:
            mass[keys.index(key)] += p
        else:
            keys.append(key)
            mass.append(p)
            qx.append(a)
            qy.append(b)
    mass = np.array(mass)
    return make_witness(mac, mass / mass.sum(), qx, qy)


def reduce_auxiliary(mac: Mac, w: RegionWitness) -> RegionWitness:
    """Shrink the support of p_V to at most |Z|+3 points.

    Preserves the three averaged MIs and the averaged output distribution.
    Raises ReductionError if the recheck drifts beyond 1e-9.
    """
    nz = len(mac.z_alphabet)
    target = w.p_v @ w.functionals()
    cur = _merge_duplicates(mac, w)
    p = cur.p_v.copy()
    rows = cur.functionals()
    live = list(range(len(p)))
    while len(live) > nz + 3:
        m = np.vstack([rows[live].T, np.ones(len(live))])
        _, _, vt = np.linalg.svd(m)
        u = vt[-1]
        if u.max() <= 0:
            u = -u
        pl = p[live]
        pos = u > 1e-14
        ratios = np.full(len(u), np.inf)
        ratios[pos] = pl[pos] / u[pos]
        hit = int(np.argmin(ratios))  # argmin returns the smallest index on ties
        step = ratios[hit]
        pl = pl - step * u
        pl[hit] = 0.0
        if pl.min() < -1e-12:
            raise ReductionError(f"shift produced negative mass {pl.min():.3g}")
        p[live] = np.clip(pl, 0, None)
        live = [i for i in live if p[i] > 0]
    p_new = p[live] / p[live].sum()
    out = make_witness(mac, p_new, cur.qx_v[live], cur.qy_v[live])
    drift = float(np.abs(p_new @ out.functionals() - target).max())
    if drift > FUNCTIONAL_TOL:
        raise ReductionError(f"functionals drifted by {drift:.3g}")
    return out


# -- convexity -----------------------------------------------------------

@dataclass(frozen=True)
class ConvexityReport:
    checks: list = field(default_factory=list)  # (lambda, (R1, R2), certified)

    @property
    def all_certified(self) -> bool:
        return all(ok for _, _, ok in self.checks)


def mix_witnesses(mac: Mac, a: RegionWitness, b: RegionWitness, lam: float) -> RegionWitness:
    p = np.concatenate([lam * a.p_v, (1 - lam) * b.p_v])
    keep = p > 0
    return make_witness(mac, p[keep] / p[keep].sum(), np.vstack([a.qx_v, b.qx_v])[keep],
                        np.vstack([a.qy_v, b.qy_v])[keep])


def convexity_probe(mac: Mac, qz: FiniteDistribution, pairs: Sequence, lambdas=(0.25, 0.5, 0.75),
                    config: SearchConfig = SearchConfig()) -> ConvexityReport:
    """Certify convex combinations of certified rate pairs via mixed witnesses."""
    certs = []
    for r in pairs:
        res = region_membership(mac, qz, *r, config)
        if res.status != "certified":
            raise PreconditionError(f"rate pair {r} is not certified")
        certs.append((tuple(r), res.witness))
    checks = []
    for (ra, wa), (rb, wb) in itertools.combinations(certs, 2) if len(certs) > 1 else [(certs[0], certs[0])]:
        for lam in lambdas:
            r = (lam * ra[0] + (1 - lam) * rb[0], lam * ra[1] + (1 - lam) * rb[1])
            mixed = mix_witnesses(mac, wa, wb, lam)
            try:
                verify_witness(mac, mixed, qz, *r, config)
                ok = True
            except TheoremViolation:
                ok = False
            checks.append((lam, r, ok))
    return ConvexityReport(checks)
