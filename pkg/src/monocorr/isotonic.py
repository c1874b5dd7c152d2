"""Weighted pool-adjacent-violators and greatest convex minorants.

Two arithmetic paths are provided.  The float path (:func:`pava`,
:func:`greatest_convex_minorant`) is what the statistics use.  The exact path
(:func:`pava_exact`, :func:`greatest_convex_minorant_exact`) accepts ints or
:class:`fractions.Fraction` and compares levels by cross-multiplication, so
block structures and slopes come out as exact rationals.

Pooling merges whenever the previous block level is ``>=`` the incoming one,
with no tolerance; the GCM likewise drops collinear knots.  Both therefore
produce the same canonical block structure (strictly increasing levels).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class WeightedSequence:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = (np.ones_like(v) if self.weights is None
             else np.asarray(self.weights, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("empty sequence")
        if w.shape != v.shape:
            raise ValueError("values and weights differ in length")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if not (np.all(np.isfinite(w)) and np.all(w > 0)):
            raise ValueError("weights must be finite and strictly positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class Block:
    start: int  # inclusive, 0-based
    end: int  # exclusive
    level: float
    weight: float


@dataclass(frozen=True)
class IsotonicFit:
    fitted: np.ndarray
    blocks: tuple[Block, ...]
    sse: float

    @property
    def levels(self) -> np.ndarray:
        return np.array([b.level for b in self.blocks])


def _pool(sums: Sequence[float], weights: Sequence[float], levels: Sequence[float]):
    """Stack-based PAVA over pre-aggregated cells; returns block lists."""
    st_s: list[float] = []
    st_w: list[float] = []
    st_l: list[float] = []
    st_start: list[int] = []
    for i, (s, w, lev) in enumerate(zip(sums, weights, levels)):
        start = i
        while st_l and st_l[-1] >= lev:
            s += st_s.pop()
            w += st_w.pop()
            st_l.pop()
            start = st_start.pop()
            lev = s / w
        st_s.append(s)
        st_w.append(w)
        st_l.append(lev)
        st_start.append(start)
    return st_start, st_l, st_w


def _blocks_from_cells(cell_starts, cell_bounds, st_start, st_l, st_w):
    blocks = []
    n_cells = len(cell_starts)
    ends = st_start[1:] + [n_cells]
    for cs, ce, lev, w in zip(st_start, ends, st_l, st_w):
        blocks.append(Block(int(cell_bounds[cs]), int(cell_bounds[ce]), float(lev), float(w)))
    return tuple(blocks)


def _expand(blocks, n) -> np.ndarray:
    fitted = np.empty(n)
    for b in blocks:
        fitted[b.start:b.end] = b.level
    return fitted


def pava(seq: WeightedSequence | Sequence[float], weights=None) -> IsotonicFit:
    """Weighted least-squares projection onto nondecreasing sequences.

    Minimizes ``sum w_i (v_i - z_i)^2`` subject to ``z_1 <= ... <= z_n`` in
    linear time.  Accepts a :class:`WeightedSequence` or plain values (unit
    weights unless ``weights`` is given).
    """
    if not isinstance(seq, WeightedSequence):
        seq = WeightedSequence(seq, weights)
    v, w = seq.values, seq.weights
    vl = v.tolist()
    wl = w.tolist()
    sums = [a * b for a, b in zip(vl, wl)]
    st_start, st_l, st_w = _pool(sums, wl, vl)
    n = v.size
    blocks = _blocks_from_cells(range(n), list(range(n + 1)), st_start, st_l, st_w)
    fitted = _expand(blocks, n)
    sse = float(np.sum(w * (v - fitted) ** 2))
    return IsotonicFit(fitted, blocks, sse)


def _normalize_groups(groups, n: int) -> np.ndarray:
    """Tie groups as a sorted array of cell boundaries ``[0, ..., n]``."""
    if hasattr(groups, "starts"):
        bounds = np.asarray(groups.starts, dtype=np.int64)
    else:
        bounds = [0]
        covered = 0
        for g in groups:
            idx = sorted(int(i) for i in g)
            if not idx:
                raise ValueError("empty tie group")
            if idx[0] != covered or idx != list(range(idx[0], idx[0] + len(idx))):
                raise ValueError(f"tie group {idx} is not contiguous in x order")
            covered = idx[-1] + 1
            bounds.append(covered)
        bounds = np.asarray(bounds, dtype=np.int64)
    if bounds[0] != 0 or bounds[-1] != n or np.any(np.diff(bounds) <= 0):
        raise ValueError("tie groups must partition 0..n-1 into contiguous runs")
    return bounds


def isotonic_with_groups(y, groups) -> IsotonicFit:
    """Isotonic fit of ``y`` constrained to be constant on each tie group.

    ``groups`` is a :class:`~monocorr.rankcore.TieReport` or an iterable of
    0-based index collections that partition ``range(len(y))`` into
    contiguous runs.  Each group is collapsed to its mean with weight equal to
    its size, pooled, and expanded back.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n == 0:
        raise ValueError("empty sequence")
    bounds = _normalize_groups(groups, n)
    sizes = np.diff(bounds)
    sums = np.add.reduceat(y, bounds[:-1])
    # singleton cells keep their value bit-for-bit
    levels = np.where(sizes == 1, y[bounds[:-1]], sums / sizes)
    st_start, st_l, st_w = _pool(sums.tolist(), sizes.astype(float).tolist(), levels.tolist())
    blocks = _blocks_from_cells(range(sizes.size), bounds.tolist(), st_start, st_l, st_w)
    fitted = _expand(blocks, n)
    return IsotonicFit(fitted, blocks, float(np.sum((y - fitted) ** 2)))


# ---------------------------------------------------------------------------
# exact arithmetic


def _as_exact(v):
    return v if isinstance(v, (int, Fraction)) else Fraction(v)


def pava_exact(values, weights=None) -> list[Fraction]:
    """PAVA over rationals; returns the fitted values as Fractions.

    Levels are never divided during pooling: ``s_a / w_a >= s_b / w_b`` is
    decided as ``s_a * w_b >= s_b * w_a``.
    """
    vals = [_as_exact(v) for v in values]
    if not vals:
        raise ValueError("empty sequence")
    ws = [1] * len(vals) if weights is None else [_as_exact(w) for w in weights]
    if any(w <= 0 for w in ws):
        raise ValueError("weights must be strictly positive")
    st_s, st_w, st_n = [], [], []
    for v, w in zip(vals, ws):
        s, cnt = v * w, 1
        while st_s and st_s[-1] * w >= s * st_w[-1]:
            s += st_s.pop()
            w += st_w.pop()
            cnt += st_n.pop()
        st_s.append(s)
        st_w.append(w)
        st_n.append(cnt)
    out: list[Fraction] = []
    for s, w, cnt in zip(st_s, st_w, st_n):
        out.extend([Fraction(s) / w] * cnt)
    return out


# ---------------------------------------------------------------------------
# greatest convex minorant


@dataclass(frozen=True)
class ConvexMinorant:
    """GCM of the path through ``(i, S(i))``, ``i = 0..n``.

    ``knots`` runs from 0 to n; ``slopes[k]`` is the slope on
    ``[knots[k], knots[k+1]]``.  Collinear knots are dropped, so slopes are
    strictly increasing.
    """

    knots: tuple[int, ...]
    slopes: tuple

    @property
    def n(self) -> int:
        return self.knots[-1]

    def evaluate(self, cumsums) -> list:
        """Minorant values at the integers ``0..n``."""
        out = []
        for k in range(len(self.knots) - 1):
            a, b = self.knots[k], self.knots[k + 1]
            base = cumsums[a]
            for i in range(a, b):
                out.append(base + self.slopes[k] * (i - a))
        out.append(cumsums[self.n])
        return out


def _gcm_knots(S) -> list[int]:
    # Monotone stack of hull vertices; pop the middle point while it lies on
    # or above the chord (cross-product test, no division).
    hull: list[int] = []
    for k in range(len(S)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (S[b] - S[a]) * (k - b) >= (S[k] - S[b]) * (b - a):
                hull.pop()
            else:
                break
        hull.append(k)
    return hull


def greatest_convex_minorant(cumsums) -> ConvexMinorant:
    S = np.asarray(cumsums, dtype=float).ravel()
    if S.size < 2 or S[0] != 0.0:
        raise ValueError("cumulative sums must have length n+1 and start at 0")
    Sl = S.tolist()
    knots = _gcm_knots(Sl)
    slopes = tuple((Sl[b] - Sl[a]) / (b - a) for a, b in zip(knots, knots[1:]))
    return ConvexMinorant(tuple(knots), slopes)


def greatest_convex_minorant_exact(cumsums) -> ConvexMinorant:
    """As :func:`greatest_convex_minorant`, with Fraction slopes."""
    S = [_as_exact(v) for v in cumsums]
    if len(S) < 2 or S[0] != 0:
        raise ValueError("cumulative sums must have length n+1 and start at 0")
    knots = _gcm_knots(S)
    slopes = tuple(Fraction(S[b] - S[a]) / (b - a) for a, b in zip(knots, knots[1:]))
    return ConvexMinorant(tuple(knots), slopes)


def slopes_as_isotonic(gcm: ConvexMinorant, n: int | None = None) -> list:
    """Left-hand slope of the minorant at each ``i = 1..n``."""
    n = gcm.n if n is None else n
    if gcm.n != n:
        raise ValueError(f"minorant spans [0, {gcm.n}], expected [0, {n}]")
    out = []
    for (a, b), s in zip(zip(gcm.knots, gcm.knots[1:]), gcm.slopes):
        out.extend([s] * (b - a))
    return out


def cumsum0(values) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(np.asarray(values, dtype=float))))


def cumsum0_exact(values) -> list:
    out = [0]
    for v in values:
        out.append(out[-1] + _as_exact(v))
    return out
