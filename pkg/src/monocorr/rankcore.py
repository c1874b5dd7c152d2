"""Ranks, empirical cdfs, quantiles and permutation/cycle machinery."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from .rng import RngSeed


class SampleError(ValueError):
    """Raised for malformed observation data."""


@dataclass(frozen=True)
class Sample:
    """Paired observations ``(x_i, y_i)``; both coordinates finite."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise SampleError(f"x and y lengths differ: {x.size} vs {y.size}")
        if x.size == 0:
            raise SampleError("empty sample")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise SampleError("sample contains NaN or infinite values")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_pairs(cls, pairs) -> "Sample":
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def require(self, min_n: int = 2) -> None:
        if self.n < min_n:
            raise SampleError(f"need at least {min_n} observations, got {self.n}")

    def has_x_ties(self) -> bool:
        return np.unique(self.x).size < self.n

    def has_y_ties(self) -> bool:
        return np.unique(self.y).size < self.n


# ---------------------------------------------------------------------------
# empirical cdf and quantiles


@dataclass(frozen=True)
class EmpiricalCdf:
    sorted_values: np.ndarray

    @property
    def n(self) -> int:
        return self.sorted_values.size

    def counts(self, t) -> np.ndarray:
        """``#{v <= t}`` for scalar or array ``t``."""
        return np.searchsorted(self.sorted_values, t, side="right")

    def evaluate(self, t):
        c = self.counts(t)
        if np.ndim(c) == 0:
            return int(c) / self.n
        return c / self.n

    __call__ = evaluate


def empirical_cdf(values) -> EmpiricalCdf:
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise SampleError("empty sample")
    if not np.all(np.isfinite(v)):
        raise SampleError("sample contains NaN or infinite values")
    v.setflags(write=False)
    return EmpiricalCdf(v)


def quantile(cdf: EmpiricalCdf, u: float) -> float:
    """Generalized inverse ``inf {t : G(t) >= u}`` over the stored atoms.

    ``u = 0`` returns the minimum.  Levels are compared against ``k/n``
    computed exactly as :meth:`EmpiricalCdf.evaluate` does, so
    ``quantile(G, G(y)) == y`` holds for every stored atom ``y``.
    """
    if not 0.0 <= u <= 1.0 or math.isnan(u):
        raise ValueError("quantile level out of range")
    n = cdf.n
    levels = np.arange(1, n + 1) / n
    k = int(np.searchsorted(levels, u, side="left"))
    return float(cdf.sorted_values[min(k, n - 1)])


# ---------------------------------------------------------------------------
# sorting by x and ranks of y


@dataclass(frozen=True)
class TieReport:
    """Contiguous runs of equal x after sorting.

    ``starts`` holds the 0-based start of every tie group plus a final
    sentinel equal to ``n``; group ``g`` covers ``starts[g]:starts[g+1]``.
    """

    starts: np.ndarray

    @property
    def n_groups(self) -> int:
        return self.starts.size - 1

    @property
    def has_ties(self) -> bool:
        return self.n_groups < int(self.starts[-1])

    @property
    def groups(self) -> list[tuple[int, int]]:
        s = self.starts.tolist()
        return list(zip(s[:-1], s[1:]))

    def sizes(self) -> np.ndarray:
        return np.diff(self.starts)


def _tie_starts(sorted_x: np.ndarray) -> np.ndarray:
    n = sorted_x.size
    brk = np.flatnonzero(sorted_x[1:] != sorted_x[:-1]) + 1
    return np.concatenate(([0], brk, [n])).astype(np.int64)


def x_order(sample: Sample, rng: RngSeed) -> tuple[np.ndarray, TieReport]:
    """Indices sorting the sample by x, ties shuffled uniformly by ``rng``."""
    keys = rng.generator().random(sample.n)
    order = np.lexsort((keys, sample.x))
    return order, TieReport(_tie_starts(sample.x[order]))


def sort_pairs_by_x(sample: Sample, rng: RngSeed) -> tuple[np.ndarray, TieReport]:
    """y values ordered by x (random order inside x-ties) and the tie report."""
    order, ties = x_order(sample, rng)
    return sample.y[order], ties


def rank_counts(values: np.ndarray) -> np.ndarray:
    """``n * G_n(v_i) = #{j : v_j <= v_i}`` as integers."""
    v = np.asarray(values, dtype=float)
    return np.searchsorted(np.sort(v), v, side="right").astype(np.int64)


def y_ranks(sample: Sample) -> np.ndarray:
    """Empirical-cdf ranks ``G_n(Y_i)``, values in ``{1/n, ..., 1}``."""
    return rank_counts(sample.y) / sample.n


# ---------------------------------------------------------------------------
# permutations


@dataclass(frozen=True)
class Permutation:
    """Permutation of ``{1..n}`` in one-line notation: ``i -> images[i-1]``."""

    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(v) for v in self.images)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise ValueError(f"not a permutation of 1..{len(imgs)}: {imgs}")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_zero_based(cls, arr) -> "Permutation":
        return cls(tuple(int(v) + 1 for v in arr))

    @property
    def n(self) -> int:
        return len(self.images)

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.images, dtype=np.int64) - 1

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self.images, start=1):
            inv[v - 1] = i
        return Permutation(tuple(inv))

    def cycles(self) -> "CycleDecomposition":
        return cycle_decomposition(self)


@dataclass(frozen=True)
class CycleDecomposition:
    """Cycles of a permutation, each starting at its smallest element."""

    n: int
    cycles: tuple[tuple[int, ...], ...]
    lengths: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(len(c) for c in self.cycles))

    @property
    def count(self) -> int:
        return len(self.cycles)

    def recompose(self) -> Permutation:
        images = [0] * self.n
        for c in self.cycles:
            for a, b in zip(c, c[1:] + c[:1]):
                images[a - 1] = b
        return Permutation(tuple(images))


def cycle_decomposition(perm: Permutation) -> CycleDecomposition:
    n = perm.n
    seen = [False] * (n + 1)
    cycles = []
    for start in range(1, n + 1):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = perm.images[i - 1]
        cycles.append(tuple(cyc))
    return CycleDecomposition(n, tuple(cycles))


def product_of_cycles(n: int, cycles) -> Permutation:
    """Permutation sending each cycle entry to the next one (wrapping)."""
    return CycleDecomposition(n, tuple(tuple(c) for c in cycles)).recompose()


def random_permutation(n: int, rng: RngSeed | np.random.Generator) -> Permutation:
    if n < 1:
        raise ValueError("permutation size must be positive")
    gen = rng.generator() if isinstance(rng, RngSeed) else rng
    return Permutation.from_zero_based(gen.permutation(n))


# ---------------------------------------------------------------------------
# number of cycles of a uniform permutation


def sample_cycle_count(n: int, rng: RngSeed | np.random.Generator) -> int:
    """One draw of ``N_n = sum_k Bernoulli(1/k)``, the cycle count law."""
    if n < 1:
        raise ValueError("n must be positive")
    gen = rng.generator() if isinstance(rng, RngSeed) else rng
    u = gen.random(n)
    return int(np.count_nonzero(u * np.arange(1, n + 1) < 1.0))


@lru_cache(maxsize=64)
def _cycle_count_pmf(n: int) -> np.ndarray:
    # P_m(k) = P_{m-1}(k-1)/m + (m-1)/m P_{m-1}(k); support truncated far in
    # the upper tail (mass beyond kmax is below 1e-60 for every n).
    kmax = n if n <= 200 else int(min(n, math.log(n) + 20 * math.sqrt(math.log(n)) + 60))
    p = np.zeros(kmax + 1)
    p[0] = 1.0
    for m in range(1, n + 1):
        nxt = np.empty_like(p)
        nxt[0] = p[0] * (m - 1) / m
        nxt[1:] = p[:-1] / m + p[1:] * ((m - 1) / m)
        p = nxt
    p /= p.sum()
    p.setflags(write=False)
    return p


def cycle_count_pmf(n: int) -> np.ndarray:
    """``pmf[k] = P(N_n = k)`` (unsigned Stirling numbers over ``n!``)."""
    if n < 1:
        raise ValueError("n must be positive")
    return _cycle_count_pmf(n)


def sample_cycle_counts(n: int, size: int, gen: np.random.Generator) -> np.ndarray:
    """Vectorized draws of ``N_n`` by inversion of the exact pmf."""
    cdf = np.cumsum(cycle_count_pmf(n))
    idx = np.searchsorted(cdf, gen.random(size), side="right")
    return np.minimum(idx, cdf.size - 1)


def harmonic(n: int) -> float:
    return float(math.fsum(1.0 / k for k in range(1, n + 1)))
