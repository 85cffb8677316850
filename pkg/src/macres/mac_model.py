"""Discrete memoryless multiple-access channels and their n-fold extensions."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AlphabetMismatch, ChannelFormatError
from .prob_core import (
    FiniteDistribution,
    JointDistribution,
    check_budget,
    enumeration_budget,
)

log = logging.getLogger(__name__)

ROW_TOL = 1e-9


def _normalize_rows(t: np.ndarray, what: str) -> np.ndarray:
    if t.ndim != 3:
        raise ChannelFormatError(f"{what}: transition must be indexed [x][y][z], got {t.ndim} dims")
    if not np.all(np.isfinite(t)) or t.min() < 0:
        bad = np.argwhere(~np.isfinite(t) | (t < 0))[0]
        raise ChannelFormatError(f"{what}: invalid entry at [x={bad[0]}][y={bad[1]}][z={bad[2]}]")
    sums = t.sum(axis=2)
    off = np.abs(sums - 1.0)
    worst = np.unravel_index(np.argmax(off), off.shape)
    if off[worst] > ROW_TOL:
        raise ChannelFormatError(
            f"{what}: row [x={worst[0]}][y={worst[1]}] sums to {sums[worst]!r}, not 1"
        )
    if off.max() > 0:
        log.info("%s: renormalized rows, largest correction %.3g", what, off.max())
        t = t / sums[:, :, None]
    return t


@dataclass(frozen=True, eq=False)
class Mac:
    """Two-input channel q(z|x,y); ``transition[x, y, z]``."""

    x_alphabet: tuple
    y_alphabet: tuple
    z_alphabet: tuple
    transition: np.ndarray
    name: str = ""

    def __post_init__(self):
        xs, ys, zs = tuple(self.x_alphabet), tuple(self.y_alphabet), tuple(self.z_alphabet)
        for label, a in (("x", xs), ("y", ys), ("z", zs)):
            if not a:
                raise ChannelFormatError(f"empty {label} alphabet")
            if len(set(a)) != len(a):
                raise ChannelFormatError(f"{label} alphabet has repeated symbols")
        t = np.asarray(self.transition, dtype=float)
        if t.shape != (len(xs), len(ys), len(zs)):
            raise ChannelFormatError(
                f"transition shape {t.shape} does not match alphabets "
                f"({len(xs)}, {len(ys)}, {len(zs)})"
            )
        t = np.array(_normalize_rows(t, self.name or "channel"))
        t.setflags(write=False)
        object.__setattr__(self, "x_alphabet", xs)
        object.__setattr__(self, "y_alphabet", ys)
        object.__setattr__(self, "z_alphabet", zs)
        object.__setattr__(self, "transition", t)

    @property
    def sizes(self) -> tuple:
        return self.transition.shape

    def swapped(self) -> "Mac":
        """Same channel with the roles of the two inputs exchanged."""
        return Mac(self.y_alphabet, self.x_alphabet, self.z_alphabet,
                   np.transpose(self.transition, (1, 0, 2)), self.name + "~swapped")

    def check_inputs(self, qx: FiniteDistribution, qy: FiniteDistribution) -> None:
        if qx.labels != self.x_alphabet:
            raise AlphabetMismatch(f"qx is over {qx.labels}, channel expects {self.x_alphabet}")
        if qy.labels != self.y_alphabet:
            raise AlphabetMismatch(f"qy is over {qy.labels}, channel expects {self.y_alphabet}")


@dataclass(frozen=True, eq=False)
class WiretapMac:
    """Legitimate and eavesdropper channels driven by the same inputs."""

    legit: Mac
    tap: Mac
    name: str = ""

    def __post_init__(self):
        if self.legit.x_alphabet != self.tap.x_alphabet:
            raise ChannelFormatError("legit and tap channels have different x alphabets")
        if self.legit.y_alphabet != self.tap.y_alphabet:
            raise ChannelFormatError("legit and tap channels have different y alphabets")


def joint(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution) -> JointDistribution:
    """Induced joint q(x) q(y) q(z|x,y) over axes (X, Y, Z)."""
    mac.check_inputs(qx, qy)
    w = qx.weights[:, None, None] * qy.weights[None, :, None] * mac.transition
    return JointDistribution((mac.x_alphabet, mac.y_alphabet, mac.z_alphabet), w / w.sum())


def output_distribution(mac: Mac, qx: FiniteDistribution, qy: FiniteDistribution) -> FiniteDistribution:
    mac.check_inputs(qx, qy)
    qz = np.einsum("x,y,xyz->z", qx.weights, qy.weights, mac.transition)
    return FiniteDistribution(mac.z_alphabet, qz / qz.sum())


def _indices(word: Sequence, alphabet: tuple, what: str) -> np.ndarray:
    try:
        return np.array([alphabet.index(s) for s in word], dtype=np.intp)
    except ValueError:
        raise AlphabetMismatch(f"{what} contains a symbol outside {alphabet}") from None


def block_likelihood(mac: Mac, xword: Sequence, yword: Sequence, zword: Sequence) -> float:
    """prod_k q(z_k | x_k, y_k) for words given as symbol labels."""
    if not len(xword) == len(yword) == len(zword):
        raise ValueError(f"word lengths differ: {len(xword)}, {len(yword)}, {len(zword)}")
    xi = _indices(xword, mac.x_alphabet, "x word")
    yi = _indices(yword, mac.y_alphabet, "y word")
    zi = _indices(zword, mac.z_alphabet, "z word")
    return float(np.prod(mac.transition[xi, yi, zi]))


def pair_rows(transition: np.ndarray, xw: np.ndarray, yw: np.ndarray) -> np.ndarray:
    """Block output rows q(.|x^n, y^n) for P index-word pairs: shape (P, |Z|**n).

    Output words are flattened in C order (first symbol most significant).
    """
    xw = np.atleast_2d(xw)
    yw = np.atleast_2d(yw)
    rows = transition[xw[:, 0], yw[:, 0], :]
    for k in range(1, xw.shape[1]):
        step = transition[xw[:, k], yw[:, k], :]
        rows = (rows[:, :, None] * step[:, None, :]).reshape(rows.shape[0], -1)
    return rows


def pair_sums(per_symbol: np.ndarray, xw: np.ndarray, yw: np.ndarray) -> np.ndarray:
    """Additive block statistic sum_k f(x_k, y_k, z_k) for P word pairs, shape (P, |Z|**n).

    ``per_symbol`` is indexed [x, y, z].
    """
    xw = np.atleast_2d(xw)
    yw = np.atleast_2d(yw)
    out = per_symbol[xw[:, 0], yw[:, 0], :]
    for k in range(1, xw.shape[1]):
        step = per_symbol[xw[:, k], yw[:, k], :]
        out = (out[:, :, None] + step[:, None, :]).reshape(out.shape[0], -1)
    return out


def word_histogram(words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct words and their relative frequencies."""
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    base = int(words.max()) + 1
    n = words.shape[1]
    if n * math.log2(max(base, 2)) >= 62:
        uniq, counts = np.unique(words, axis=0, return_counts=True)
        return uniq, counts / counts.sum()
    # encode each word as one integer; sorted codes give lexicographic order
    codes = words @ (base ** np.arange(n - 1, -1, -1, dtype=np.int64))
    _, first, counts = np.unique(codes, return_index=True, return_counts=True)
    return words[first], counts / counts.sum()


def push_forward(transition: np.ndarray, xwords: np.ndarray, ywords: np.ndarray,
                 budget: int | None = None) -> np.ndarray:
    """Output distribution over Z^n when x- and y-words are drawn uniformly
    and independently from the two (multi)sets of index words.

    Returns a flat array of length |Z|**n. Picks a tensor contraction or a
    pairwise sum, whichever fits the enumeration budget with less work.
    """
    limit = enumeration_budget() if budget is None else budget
    nx, ny, nz = transition.shape
    xwords = np.atleast_2d(xwords)
    ywords = np.atleast_2d(ywords)
    n = xwords.shape[1]
    if ywords.shape[1] != n:
        raise ValueError("codewords of the two transmitters differ in length")
    check_budget(nz**n, f"output alphabet Z^{n}", limit)
    ux, wx = word_histogram(xwords)
    uy, wy = word_histogram(ywords)
    pairs = len(ux) * len(uy)
    tensor_size = max(nx * ny, nz) ** n
    pair_cost = pairs * nz**n
    if tensor_size <= limit and tensor_size <= pair_cost:
        return _push_tensor(transition, ux, wx, uy, wy)
    check_budget(pair_cost, "codebook output enumeration", limit)
    out = np.zeros(nz**n)
    chunk = max(1, min(len(ux), 2_000_000 // max(nz**n, 1)))
    for j, yword in enumerate(uy):
        for s in range(0, len(ux), chunk):
            xs = ux[s:s + chunk]
            rows = pair_rows(transition, xs, np.broadcast_to(yword, xs.shape))
            out += wy[j] * (wx[s:s + chunk] @ rows)
    return out


def _push_tensor(transition, ux, wx, uy, wy) -> np.ndarray:
    nx, ny, nz = transition.shape
    n = ux.shape[1]
    w1 = np.zeros((nx,) * n)
    np.add.at(w1, tuple(ux.T), wx)
    w2 = np.zeros((ny,) * n)
    np.add.at(w2, tuple(uy.T), wy)
    j = np.multiply.outer(w1, w2)
    # interleave to (x1, y1, x2, y2, ...) and merge each (x_k, y_k) pair
    order = [ax for k in range(n) for ax in (k, n + k)]
    j = np.transpose(j, order).reshape((nx * ny,) * n)
    q2 = transition.reshape(nx * ny, nz)
    for _ in range(n):
        j = np.tensordot(j, q2, axes=([0], [0]))
    return j.reshape(-1)


# -- channel files -------------------------------------------------------

def _mac_from_dict(d: dict, what: str) -> Mac:
    try:
        xs, ys, zs = d["x_alphabet"], d["y_alphabet"], d["z_alphabet"]
        raw = d["transition"]
    except KeyError as e:
        raise ChannelFormatError(f"{what}: missing field {e.args[0]!r}") from None
    try:
        t = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ChannelFormatError(f"{what}: transition is not a rectangular numeric array") from None
    return Mac(tuple(xs), tuple(ys), tuple(zs), t, name=d.get("name", what))


def channel_from_dict(d: dict):
    if "legit" in d or "tap" in d:
        if not ("legit" in d and "tap" in d):
            raise ChannelFormatError("wiretap file needs both 'legit' and 'tap'")
        legit = _mac_from_dict(d["legit"], "legit")
        tap = _mac_from_dict(d["tap"], "tap")
        return WiretapMac(legit, tap, name=d.get("name", ""))
    return _mac_from_dict(d, d.get("name", "channel"))


def channel_to_dict(ch) -> dict:
    def one(m: Mac) -> dict:
        return {
            "name": m.name,
            "x_alphabet": list(m.x_alphabet),
            "y_alphabet": list(m.y_alphabet),
            "z_alphabet": list(m.z_alphabet),
            "transition": m.transition.tolist(),
        }
    if isinstance(ch, WiretapMac):
        return {"name": ch.name, "legit": one(ch.legit), "tap": one(ch.tap)}
    return one(ch)


def bundled_channels() -> list[str]:
    return sorted(p.name for p in resources.files("macres").joinpath("data").iterdir()
                  if p.name.endswith(".json"))


def load_channel(path):
    """Load a Mac or WiretapMac from a JSON channel file.

    A bare file name that does not exist on disk is looked up among the
    fixtures shipped with the package (e.g. ``adder2.json``).
    """
    p = Path(path)
    if p.exists():
        text = p.read_text(encoding="utf-8")
    else:
        res = resources.files("macres").joinpath("data", p.name)
        if p.parent != Path(".") or not res.is_file():
            raise FileNotFoundError(f"no channel file {path!s}")
        text = res.read_text(encoding="utf-8")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChannelFormatError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(d, dict):
        raise ChannelFormatError(f"{path}: top level must be an object")
    return channel_from_dict(d)
