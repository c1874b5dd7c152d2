"""Permutation statistics behind the null law of the isotonic coefficient.

Under independence the ranks along x form a uniform permutation ``pi``, and
``n * cmon`` is the sum of squared isotonic slopes of ``x_pi(1), ...,
x_pi(n)`` over the standardized grid ``x_i = (i/n - mu_n)/sigma_n``.  The
Bohnenblust-Spitzer map sends ``pi`` to the permutation whose cycles are the
blocks between consecutive knots of the greatest convex minorant, which turns
that sum of squares into the cycle functional :func:`f2`.

The map needs values without coincidences among block averages.  The grid
is perturbed exactly: values are proportional to ``b_i = 2i - n - 1`` and get
``eps_0 / 3**i`` added (``eps_0 = 2**-20``), represented as integers over
the common denominator ``2**20 * 3**n``.  Positive rescaling leaves every
knot unchanged, so this is equivalent to perturbing ``x_i`` itself by at most
``2**-20``.  Base-3 digits make all subset sums distinct; any residual
collinearity on the minorant is detected exactly and raised as
:class:`DegeneratePerturbation`.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
import itertools
import math

import numpy as np

from .isotonic import _gcm_knots, pava
from .rankcore import (
    CycleDecomposition, Permutation, RngSeed, cycle_decomposition, product_of_cycles,
)

MAX_BIJECTION_N = 7
MAX_CYCLE_COUNT_N = 8
DELTA0_EXP = 20


@dataclass(frozen=True)
class StandardizedGrid:
    n: int
    x: np.ndarray
    mu: float
    sigma2: float


def standardized_grid(n: int) -> StandardizedGrid:
    if n < 2:
        raise ValueError("standardized grid needs n >= 2")
    mu = 0.5 * (1.0 + 1.0 / n)
    sigma2 = (1.0 - 1.0 / n**2) / 12.0
    i = np.arange(1, n + 1)
    x = (i / n - mu) / math.sqrt(sigma2)
    x.setflags(write=False)
    return StandardizedGrid(n, x, mu, sigma2)


def cumsum_process(perm: Permutation, values) -> np.ndarray:
    """``S(0) = 0``, ``S(i) = values[perm(1)] + ... + values[perm(i)]``."""
    v = np.asarray(values, dtype=float)
    if v.size != perm.n:
        raise ValueError(f"length mismatch: permutation of {perm.n}, {v.size} values")
    return np.concatenate(([0.0], np.cumsum(v[perm.zero_based()])))


class DegeneratePerturbation(ValueError):
    pass


@dataclass(frozen=True)
class PerturbedValues:
    """Integer-scaled perturbed values ``base_i * D + D * eps_0 / base**i``.

    ``ints[i-1]`` is the scaled value of index ``i``; ``denominator`` is ``D``.
    Subset sums are pairwise distinct whenever ``radix >= 3``.
    """

    base: tuple[int, ...]
    radix: int
    ints: tuple[int, ...]
    denominator: int

    @property
    def n(self) -> int:
        return len(self.base)

    def delta(self, i: int) -> Fraction:
        return Fraction(self.ints[i - 1] - self.base[i - 1] * self.denominator, self.denominator)

    def as_fractions(self) -> list[Fraction]:
        return [Fraction(v, self.denominator) for v in self.ints]


def perturbed_grid(n: int, radix: int | None = None) -> PerturbedValues:
    """Exact perturbation of the grid, proportional to ``b_i = 2i - n - 1``."""
    if radix is None:
        radix = 3
    if radix < 3:
        raise ValueError("radix must be at least 3")
    base = tuple(2 * i - n - 1 for i in range(1, n + 1))
    D = (1 << DELTA0_EXP) * radix**n
    ints = tuple(b * D + radix ** (n - i) for i, b in enumerate(base, start=1))
    return PerturbedValues(base, radix, ints, D)


def gcm_knots_checked(S: list[int]) -> list[int]:
    """Knots of the GCM; raise if any three path points are collinear on it."""
    knots = _gcm_knots(S)
    for a, b in zip(knots, knots[1:]):
        for k in range(a + 1, b):
            if (S[k] - S[a]) * (b - a) == (S[b] - S[a]) * (k - a):
                raise DegeneratePerturbation("degenerate perturbation")
    slopes = [(S[b] - S[a], b - a) for a, b in zip(knots, knots[1:])]
    for (p, q), (r, s) in zip(slopes, slopes[1:]):
        if p * s == r * q:
            raise DegeneratePerturbation("degenerate perturbation")
    return knots


def bohnenblust_spitzer(perm: Permutation, values: PerturbedValues | None = None) -> Permutation:
    """Cycle product over the GCM blocks of the cumulative-sum path."""
    n = perm.n
    values = perturbed_grid(n) if values is None else values
    if values.n != n:
        raise ValueError("length mismatch")
    S = [0]
    for i in perm.images:
        S.append(S[-1] + values.ints[i - 1])
    knots = gcm_knots_checked(S)
    imgs = perm.images
    cycles = [imgs[a:b] for a, b in zip(knots, knots[1:])]
    return product_of_cycles(n, cycles)


def f1(perm: Permutation, n: int | None = None) -> float:
    """``1 - 3/(n^2-1) * sum over cycles of sum |i - j|`` (cyclic pairs)."""
    n = perm.n if n is None else n
    total = 0
    for c in cycle_decomposition(perm).cycles:
        for a, b in zip(c, c[1:] + c[:1]):
            total += abs(a - b)
    return 1.0 - 3.0 * total / (n * n - 1)


def f2(perm: Permutation | CycleDecomposition, grid: StandardizedGrid) -> float:
    """``sum over cycles C of (sum_{i in C} x_i)^2 / |C|``."""
    cyc = perm if isinstance(perm, CycleDecomposition) else cycle_decomposition(perm)
    x = grid.x
    tot = 0.0
    for c in cyc.cycles:
        idx = np.asarray(c) - 1
        tot += float(x[idx].sum()) ** 2 / len(c)
    return tot


def isotonic_sum_sq(perm: Permutation, grid: StandardizedGrid) -> float:
    """Sum of squared isotonic slopes of ``x_perm(1), ..., x_perm(n)``."""
    fit = pava(grid.x[perm.zero_based()])
    return float(sum(b.weight * b.level**2 for b in fit.blocks))


def chatterjee_of_permutation(perm: Permutation) -> float:
    """``1 - 3 sum |pi(i) - pi(i+1)| / (n^2 - 1)``."""
    p = perm.zero_based()
    n = p.size
    return 1.0 - 3.0 * int(np.abs(np.diff(p)).sum()) / (n * n - 1)


# ---------------------------------------------------------------------------
# exhaustive checks


def stirling_first_unsigned(n: int) -> list[int]:
    """``c(n, k)`` for ``k = 0..n`` via ``c(m,k) = c(m-1,k-1) + (m-1) c(m-1,k)``."""
    row = [1]
    for m in range(1, n + 1):
        nxt = [0] * (m + 1)
        for k in range(m + 1):
            left = row[k - 1] if k >= 1 else 0
            right = row[k] if k < m else 0
            nxt[k] = left + (m - 1) * right
        row = nxt
    return row


@dataclass(frozen=True)
class BijectionReport:
    n: int
    permutations: int
    injective: bool
    surjective: bool
    knot_segments: dict
    output_cycle_counts: dict
    stirling_match: bool

    @property
    def bijective(self) -> bool:
        return self.injective and self.surjective

    @property
    def ok(self) -> bool:
        return self.bijective and self.stirling_match


def verify_bijection(n: int, radix: int | None = None) -> BijectionReport:
    if n > MAX_BIJECTION_N:
        raise ValueError(f"enumeration capped at n <= {MAX_BIJECTION_N}")
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return BijectionReport(1, 1, True, True, {1: 1}, {1: 1}, True)
    values = perturbed_grid(n, radix)
    seen = set()
    segs: Counter = Counter()
    cyc: Counter = Counter()
    total = 0
    for imgs in itertools.permutations(range(1, n + 1)):
        total += 1
        S = [0]
        for i in imgs:
            S.append(S[-1] + values.ints[i - 1])
        knots = gcm_knots_checked(S)
        out = product_of_cycles(n, [imgs[a:b] for a, b in zip(knots, knots[1:])])
        seen.add(out.images)
        segs[len(knots) - 1] += 1
        cyc[cycle_decomposition(out).count] += 1
    stir = stirling_first_unsigned(n)
    expected = {k: stir[k] for k in range(1, n + 1) if stir[k]}
    return BijectionReport(
        n, total,
        injective=len(seen) == total,
        surjective=len(seen) == math.factorial(n),
        knot_segments=dict(sorted(segs.items())),
        output_cycle_counts=dict(sorted(cyc.items())),
        stirling_match=dict(sorted(cyc.items())) == expected and dict(sorted(segs.items())) == expected,
    )


def expected_cycle_counts(n: int) -> list[Fraction]:
    """Expected number of cycles of each length ``1..n``, by enumeration."""
    if n > MAX_CYCLE_COUNT_N:
        raise ValueError(f"enumeration capped at n <= {MAX_CYCLE_COUNT_N}")
    if n < 1:
        raise ValueError("n must be positive")
    counts = [0] * (n + 1)
    total = 0
    for imgs in itertools.permutations(range(1, n + 1)):
        total += 1
        for length in cycle_decomposition(Permutation(imgs)).lengths:
            counts[length] += 1
    return [Fraction(c, total) for c in counts[1:]]


# ---------------------------------------------------------------------------
# simulation


PAIR_COLUMNS = ("sqrt_n_f1_stat", "sum_w2")


def null_pair_simulation(n: int, reps: int, rng: RngSeed) -> np.ndarray:
    """Rows ``(sqrt(n) * Cn(pi), sum of squared isotonic slopes)`` for uniform ``pi``.

    Column 1 is the Chatterjee statistic of the permutation, column 2 equals
    ``n * cmon``; replicate ``i`` uses ``rng.replicate(i)``.
    """
    if reps < 100:
        raise ValueError("need reps >= 100")
    grid = standardized_grid(n)
    out = np.empty((reps, 2))
    rn = math.sqrt(n)
    for r in range(reps):
        p = rng.replicate(r).permutation(n)
        d = int(np.abs(np.diff(p)).sum())
        out[r, 0] = rn * (1.0 - 3.0 * d / (n * n - 1))
        fit = pava(grid.x[p])
        out[r, 1] = sum(b.weight * b.level**2 for b in fit.blocks)
    return out
