"""Exact finite probability: distributions, joints, products and distances.

Everything here works on explicit weight tensors. Arrays are frozen after
construction so values can be shared freely between threads.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import AlphabetMismatch, AxisError, BudgetExceeded, ProbabilityError

MASS_TOL = 1e-12
DEFAULT_BUDGET = 10**7
BUDGET_ENV = "MACRES_ENUM_BUDGET"


def enumeration_budget() -> int:
    """Largest support size that may be enumerated explicitly.

    Defaults to 10**7 and can be overridden with ``MACRES_ENUM_BUDGET``.
    """
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(float(raw))
    except ValueError:
        raise ValueError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{BUDGET_ENV} must be positive, got {value}")
    return value


def check_budget(size: int, what: str, budget: int | None = None) -> None:
    limit = enumeration_budget() if budget is None else budget
    if size > limit:
        raise BudgetExceeded(
            f"{what} needs {size} entries, over the enumeration budget of {limit}; "
            "use a Monte Carlo path instead"
        )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_mass(weights: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(weights)):
        raise ProbabilityError(f"{what}: non-finite weight")
    if weights.size and weights.min() < 0:
        raise ProbabilityError(f"{what}: negative weight {weights.min():.3g}")
    total = float(weights.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise ProbabilityError(f"{what}: weights sum to {total!r}, not 1")


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """Probability mass function over an ordered, labelled finite alphabet."""

    labels: tuple
    weights: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(set(labels)) != len(labels):
            raise ProbabilityError(f"labels are not distinct: {labels}")
        if len(labels) != weights.size:
            raise ProbabilityError(
                f"{len(labels)} labels but {weights.size} weights"
            )
        _check_mass(weights, "distribution")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", _frozen(weights))

    @classmethod
    def uniform(cls, labels: Sequence[Hashable]) -> "FiniteDistribution":
        k = len(labels)
        return cls(tuple(labels), np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, labels: Sequence[Hashable], at: Hashable) -> "FiniteDistribution":
        labels = tuple(labels)
        w = np.zeros(len(labels))
        w[labels.index(at)] = 1.0
        return cls(labels, w)

    @classmethod
    def from_weights(cls, weights: Iterable[float], labels=None) -> "FiniteDistribution":
        w = np.asarray(list(weights), dtype=float)
        return cls(tuple(range(w.size)) if labels is None else tuple(labels), w)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise AlphabetMismatch(f"{label!r} is not in the alphabet {self.labels}") from None

    def prob(self, label) -> float:
        return float(self.weights[self.index(label)])

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def __repr__(self) -> str:
        body = ", ".join(f"{l!r}: {w:.6g}" for l, w in zip(self.labels, self.weights))
        return f"FiniteDistribution({{{body}}})"


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability tensor indexed by one symbol per axis."""

    axes: tuple
    weights: np.ndarray

    def __post_init__(self):
        axes = tuple(tuple(a) for a in self.axes)
        weights = np.asarray(self.weights, dtype=float)
        shape = tuple(len(a) for a in axes)
        if weights.shape != shape:
            if weights.size != math.prod(shape):
                raise ProbabilityError(
                    f"weights of shape {weights.shape} do not fit axes of sizes {shape}"
                )
            weights = weights.reshape(shape)
        for a in axes:
            if len(set(a)) != len(a):
                raise ProbabilityError(f"axis labels are not distinct: {a}")
        _check_mass(weights, "joint distribution")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return self.weights.shape

    def index(self, point: Sequence) -> tuple:
        if len(point) != self.ndim:
            raise AxisError(f"point has {len(point)} coordinates, joint has {self.ndim} axes")
        out = []
        for k, (label, axis) in enumerate(zip(point, self.axes)):
            try:
                out.append(axis.index(label))
            except ValueError:
                raise AlphabetMismatch(f"{label!r} is not on axis {k}") from None
        return tuple(out)

    def prob(self, point: Sequence) -> float:
        return float(self.weights[self.index(point)])

    def marginal(self, axis: int) -> FiniteDistribution:
        m = marginalize(self, (axis,))
        return FiniteDistribution(self.axes[axis], m.weights)

    def flat(self) -> FiniteDistribution:
        """The joint seen as one distribution over tuples (C order)."""
        import itertools

        labels = tuple(itertools.product(*self.axes))
        return FiniteDistribution(labels, self.weights.reshape(-1))


def normalize_axes(keep, ndim: int) -> tuple:
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    keep = tuple(int(k) for k in keep)
    if not keep:
        raise AxisError("axis set must be non-empty")
    for k in keep:
        if not 0 <= k < ndim:
            raise AxisError(f"axis {k} out of range for {ndim} axes")
    if len(set(keep)) != len(keep):
        raise AxisError(f"repeated axis in {keep}")
    return keep


def marginalize(j: JointDistribution, keep) -> JointDistribution:
    """Sum out every axis not in ``keep``; kept axes appear in the given order."""
    keep = normalize_axes(keep, j.ndim)
    drop = tuple(k for k in range(j.ndim) if k not in keep)
    w = j.weights.sum(axis=drop) if drop else j.weights
    # remaining axes are in increasing order; permute into requested order
    order = sorted(keep)
    w = np.transpose(w, [order.index(k) for k in keep])
    return JointDistribution(tuple(j.axes[k] for k in keep), w)


def product(*dists: FiniteDistribution, budget: int | None = None) -> JointDistribution:
    """Independent product of the given distributions."""
    if not dists:
        raise AxisError("product of zero distributions")
    check_budget(math.prod(len(d) for d in dists), "product distribution", budget)
    w = dists[0].weights
    for d in dists[1:]:
        w = np.multiply.outer(w, d.weights)
    return JointDistribution(tuple(d.labels for d in dists), w)


def product_extension(p: FiniteDistribution, n: int, budget: int | None = None) -> JointDistribution:
    """Memoryless n-fold extension p x p x ... x p."""
    if n < 1:
        raise ValueError(f"block length must be positive, got {n}")
    check_budget(len(p) ** n, f"{n}-fold extension", budget)
    return product(*([p] * n), budget=budget)


def tv_arrays(p: np.ndarray, q: np.ndarray) -> float:
    """Variational distance of two weight arrays of equal shape."""
    diff = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    half_l1 = 0.5 * float(np.abs(diff).sum())
    positive_part = float(np.clip(diff, 0.0, None).sum())
    if abs(half_l1 - positive_part) > MASS_TOL:
        raise ProbabilityError(
            f"half-L1 {half_l1!r} and positive-part {positive_part!r} disagree; "
            "inputs are not both normalized"
        )
    return min(max(half_l1, 0.0), 1.0)


def variational_distance(p, q) -> float:
    """Half the L1 distance; cross-checked against the sum of positive parts."""
    if isinstance(p, JointDistribution) or isinstance(q, JointDistribution):
        if not (isinstance(p, JointDistribution) and isinstance(q, JointDistribution)):
            raise AlphabetMismatch("cannot compare a joint with a single distribution")
        if p.axes != q.axes:
            raise AlphabetMismatch("joint distributions live on different axes")
    elif p.labels != q.labels:
        raise AlphabetMismatch(f"alphabets differ: {p.labels} vs {q.labels}")
    return tv_arrays(p.weights, q.weights)
