"""Local alternatives, score statistics and Pitman efficiency by simulation.

A :class:`ParametricFamily` bundles a sampler for ``(X, Y)`` at parameter
``theta``, the score ``d/dtheta log h_theta`` at ``theta = 0`` and its
variance ``tau0^2``.  Efficiency of a statistic ``T`` against the family is
the squared null correlation of ``sqrt(n) T`` with the normalized score sum
``L_n``.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Callable

import numpy as np
from scipy import stats

from . import correlations as corr
from .nulldist import pvalue_cn, upper_tail
from .rankcore import RngSeed, Sample, rank_counts

Sampler = Callable[[float, int, np.random.Generator], tuple[np.ndarray, np.ndarray]]
Score = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ParametricFamily:
    name: str
    sampler: Sampler
    score: Score
    fisher_info: float
    y_cdf0: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def sample(self, theta: float, n: int, gen: np.random.Generator) -> Sample:
        x, y = self.sampler(theta, n, gen)
        return Sample(x, y)


@dataclass(frozen=True)
class NoiseDensity:
    """Noise law for the trend model: density, derivative, sampler, cdf."""

    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    dpdf: Callable[[np.ndarray], np.ndarray]
    sample: Callable[[np.random.Generator, int], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    fisher_info: float | None = None  # I(g) = int g'^2 / g


def gaussian_noise() -> NoiseDensity:
    return NoiseDensity(
        "normal",
        pdf=stats.norm.pdf,
        dpdf=lambda y: -y * stats.norm.pdf(y),
        sample=lambda g, n: g.standard_normal(n),
        cdf=stats.norm.cdf,
        fisher_info=1.0,
    )


def logistic_noise() -> NoiseDensity:
    def pdf(y):
        return stats.logistic.pdf(y)

    def dpdf(y):
        return -np.tanh(y / 2.0) * stats.logistic.pdf(y)

    return NoiseDensity("logistic", pdf, dpdf, lambda g, n: g.logistic(size=n),
                        stats.logistic.cdf, fisher_info=1.0 / 3.0)


def _mc_fisher(sampler: Sampler, score: Score, draws: int = 100_000) -> float:
    g = RngSeed(0x5EED).generator()
    x, y = sampler(0.0, draws, g)
    return float(np.mean(score(x, y) ** 2))


def trend_model(a: Callable[[np.ndarray], np.ndarray], noise: NoiseDensity | None = None,
                name: str = "trend", a_second_moment: float | None = None) -> ParametricFamily:
    """``Y = theta * a(X) + eps`` with ``X ~ Unif(0,1)`` and ``eps ~ noise``.

    Score at zero is ``-a(x) g0'(y) / g0(y)``; ``tau0^2 = E a(X)^2 * I(g0)``
    when both factors are known in closed form, else a frozen Monte Carlo
    estimate over 10^5 draws.
    """
    noise = gaussian_noise() if noise is None else noise

    def sampler(theta, n, gen):
        x = gen.random(n)
        eps = noise.sample(gen, n)
        return x, theta * a(x) + eps

    def score(x, y):
        g = noise.pdf(y)
        if np.any(g <= 0):
            raise ValueError("nonpositive density evaluation in score")
        return -a(x) * noise.dpdf(y) / g

    if a_second_moment is not None and noise.fisher_info is not None:
        tau2 = a_second_moment * noise.fisher_info
    else:
        tau2 = _mc_fisher(sampler, score)
    return ParametricFamily(name, sampler, score, tau2, noise.cdf,
                            f"Y = theta a(X) + {noise.name} noise, X ~ Unif(0,1)")


def x_tilt_family() -> ParametricFamily:
    """Independence family: X has density ``1 + theta (2x - 1)``, Y ~ N(0,1).

    The score ``2x - 1`` depends on x alone, so rank statistics have zero
    covariance with it for every n.
    """

    def sampler(theta, n, gen):
        u = gen.random(n)
        if theta == 0:
            x = u
        else:
            # invert F(x) = x + theta (x^2 - x)
            b = 1.0 - theta
            x = (-b + np.sqrt(b * b + 4.0 * theta * u)) / (2.0 * theta)
        return x, gen.standard_normal(n)

    return ParametricFamily("x-tilt", sampler, lambda x, y: 2.0 * x - 1.0, 1.0 / 3.0,
                            stats.norm.cdf, "X tilted, Y independent N(0,1)")


def _sign(x):
    return np.where(x >= 0.5, 1.0, -1.0)


FAMILIES: dict[str, Callable[[], ParametricFamily]] = {
    "gauss-trend": lambda: trend_model(lambda x: x, name="gauss-trend", a_second_moment=1.0 / 3.0),
    "gauss-trend-centered": lambda: trend_model(lambda x: x - 0.5, name="gauss-trend-centered",
                                                a_second_moment=1.0 / 12.0),
    "sign-trend": lambda: trend_model(_sign, name="sign-trend", a_second_moment=1.0),
    "logistic-trend": lambda: trend_model(lambda x: x, logistic_noise(), name="logistic-trend",
                                          a_second_moment=1.0 / 3.0),
    "x-tilt": x_tilt_family,
}


def get_family(name: str) -> ParametricFamily:
    try:
        return FAMILIES[name]()
    except KeyError:
        raise KeyError(f"unknown family {name!r}; shipped families: {', '.join(sorted(FAMILIES))}") from None


def score_statistic(sample: Sample, family: ParametricFamily) -> float:
    """``L_n = sum score(X_i, Y_i) / (tau0 sqrt(n))``."""
    s = family.score(sample.x, sample.y)
    return float(s.sum() / (math.sqrt(family.fisher_info) * math.sqrt(sample.n)))


# ---------------------------------------------------------------------------
# efficiency


def _scaled_statistic(name: str, sample: Sample, family: ParametricFamily,
                      rng: RngSeed, lam: float) -> float:
    n = sample.n
    if name == "score":
        return score_statistic(sample, family)
    if name == "cn":
        return math.sqrt(n) * corr.chatterjee_cn(sample, rng)
    if name == "spearman":
        return math.sqrt(n) * corr.spearman(sample)
    if name == "cmon-sqrt":
        return math.sqrt(n) * math.sqrt(corr.cmon_hat(sample, rng))
    if name == "combined":
        rep = corr.correlation_report(sample, rng, (lam,))
        return math.sqrt(n) * rep.combined_lambda[float(lam)]
    raise ValueError(f"unknown statistic {name!r}")


EFFICIENCY_STATISTICS = ("score", "cn", "spearman", "cmon-sqrt", "combined")


@dataclass(frozen=True)
class EfficiencyEstimate:
    statistic: str
    family: str
    n: int
    reps: int
    rho: float
    rho_se: float
    rho2: float
    rho2_se: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "kind": "efficiency", "statistic": self.statistic, "family": self.family,
            "n": self.n, "reps": self.reps, "estimate": self.rho2, "se": self.rho2_se,
            "rho": self.rho, "rho_se": self.rho_se, "seed": self.seed,
        }


def _corr_pair(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Correlation and its square; the square is exactly 1 when ``a is b``."""
    ac = a - a.mean()
    bc = b - b.mean()
    saa, sbb, sab = ac @ ac, bc @ bc, ac @ bc
    if saa <= 0 or sbb <= 0:
        raise ValueError("degenerate statistic variance")
    return float(sab / math.sqrt(saa * sbb)), float(sab * sab / (saa * sbb))


def _jackknife_se(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Delete-one jackknife standard errors of the correlation and its square.

    Leave-one-out centered sums follow from ``S - c_i d_i m/(m-1)`` with
    ``c, d`` centered at the full-sample means.
    """
    m = a.size
    ac = a - a.mean()
    bc = b - b.mean()
    k = m / (m - 1.0)
    saa = ac @ ac - k * ac * ac
    sbb = bc @ bc - k * bc * bc
    sab = ac @ bc - k * ac * bc
    rho = sab / np.sqrt(saa * sbb)
    rho2 = sab * sab / (saa * sbb)

    def se(v):
        return float(math.sqrt((m - 1.0) / m * np.sum((v - v.mean()) ** 2)))

    return se(rho), se(rho2)


def pitman_efficiency_mc(statistic: str, family: ParametricFamily, n: int, reps: int,
                         rng: RngSeed, lam: float = 0.5) -> EfficiencyEstimate:
    """Squared null correlation of ``sqrt(n) T_n`` with ``L_n``.

    Standard errors of ``rho`` and ``rho^2`` are delete-one jackknife
    estimates over replicates.
    """
    if reps < 1000:
        raise ValueError("efficiency estimate needs reps >= 1000")
    tie_seed = rng.with_stream(rng.stream + 1)
    t = np.empty(reps)
    L = np.empty(reps)
    for i in range(reps):
        s = family.sample(0.0, n, rng.replicate(i))
        L[i] = score_statistic(s, family)
        t[i] = L[i] if statistic == "score" else _scaled_statistic(statistic, s, family, tie_seed, lam)
    if statistic == "score":
        t = L
    rho, rho2 = _corr_pair(t, L)
    rho_se, rho2_se = _jackknife_se(t, L)
    return EfficiencyEstimate(statistic, family.name, n, reps, rho, rho_se, rho2, rho2_se, rng.seed)


def efficiency_combined(e_cn: float, lam: float) -> float:
    """Efficiency of ``lam Cn + (1-lam) sqrt(cmon)`` given that of ``Cn``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if lam == 1:
        return e_cn
    return e_cn / (1.0 + (15.0 / 8.0) * ((1.0 - lam) / lam) ** 2)


# ---------------------------------------------------------------------------
# cancellation identity


@dataclass(frozen=True)
class CancellationCheck:
    family: str
    n: int
    reps: int
    estimate: float
    se: float
    cov_abs_diff: float
    cov_abs_diff_se: float
    cov_v1mv: float
    cov_v1mv_se: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "kind": "cancellation", "family": self.family, "n": self.n, "reps": self.reps,
            "estimate": self.estimate, "se": self.se,
            "cov_abs_diff": self.cov_abs_diff, "cov_abs_diff_se": self.cov_abs_diff_se,
            "cov_v1mv": self.cov_v1mv, "cov_v1mv_se": self.cov_v1mv_se, "seed": self.seed,
        }


def _cov_se(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    prod = (a - a.mean()) * (b - b.mean())
    m = prod.size
    return float(prod.sum() / (m - 1)), float(prod.std(ddof=1) / math.sqrt(m))


def cancellation_check(family: ParametricFamily, n: int, reps: int, rng: RngSeed) -> CancellationCheck:
    """Monte Carlo of ``Cov(A, S) + 2 Cov(B, S)`` under ``theta = 0``.

    ``A = sum_i |V_(i) - V_(i+1)|`` around the x order with ``(n+1) = (1)``,
    ``B = sum_i V_i (1 - V_i)``, ``S = sum_i score(X_i, Y_i)`` and
    ``V = G_0(Y)``.  The combination vanishes exactly for every ``n >= 2``.
    """
    if reps < 1000:
        raise ValueError("cancellation check needs reps >= 1000")
    if n < 2:
        raise ValueError("need n >= 2")
    A = np.empty(reps)
    B = np.empty(reps)
    S = np.empty(reps)
    for i in range(reps):
        x, y = family.sampler(0.0, n, rng.replicate(i))
        v = family.y_cdf0(y)[np.argsort(x, kind="stable")]
        A[i] = np.abs(v - np.roll(v, -1)).sum()
        B[i] = (v * (1.0 - v)).sum()
        S[i] = family.score(x, y).sum()
    est, se = _cov_se(A + 2.0 * B, S)
    ca, ca_se = _cov_se(A, S)
    cb, cb_se = _cov_se(B, S)
    return CancellationCheck(family.name, n, reps, est, se, ca, ca_se, cb, cb_se, rng.seed)


# ---------------------------------------------------------------------------
# local power


@dataclass(frozen=True)
class PowerComparison:
    family: str
    n: int
    t: float
    reps: int
    level: float
    power_score: float
    power_cn: float

    def to_dict(self) -> dict:
        return {"kind": "power", "family": self.family, "n": self.n, "t": self.t,
                "reps": self.reps, "level": self.level,
                "power_score": self.power_score, "power_cn": self.power_cn}


def local_power(family: ParametricFamily, n: int, t: float, reps: int, rng: RngSeed,
                level: float = 0.05) -> PowerComparison:
    """Rejection rates of the score test and the Cn test at ``theta = t/sqrt(n)``."""
    theta = t / math.sqrt(n)
    tie_seed = rng.with_stream(rng.stream + 1)
    rej_s = rej_c = 0
    for i in range(reps):
        s = family.sample(theta, n, rng.replicate(i))
        rej_s += upper_tail(score_statistic(s, family)) <= level
        rej_c += pvalue_cn(corr.chatterjee_cn(s, tie_seed), n).p_value <= level
    return PowerComparison(family.name, n, t, reps, level, rej_s / reps, rej_c / reps)


# ---------------------------------------------------------------------------
# copula grids and the efficient score


@dataclass(frozen=True)
class GridDensity:
    """Density on ``(0,1)^2`` sampled at cell midpoints, ``values[i, j]`` at
    ``((i + 1/2)/m, (j + 1/2)/m)``; rows index x."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("grid density must be square")
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        if abs(v.mean() - 1.0) > 1e-8:
            raise ValueError("density must integrate to 1 on the grid")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_function(cls, h: Callable[[np.ndarray, np.ndarray], np.ndarray], m: int = 128) -> "GridDensity":
        u, v = grid_midpoints(m)
        return cls(h(u, v))


def grid_midpoints(m: int) -> tuple[np.ndarray, np.ndarray]:
    c = (np.arange(m) + 0.5) / m
    return np.meshgrid(c, c, indexing="ij")


def score_on_grid(h: Callable[[float, np.ndarray, np.ndarray], np.ndarray], m: int = 128,
                  eps: float = 1e-5) -> np.ndarray:
    """Central-difference ``d/dtheta log h_theta`` at ``theta = 0`` on the midpoint grid."""
    u, v = grid_midpoints(m)
    return (np.log(h(eps, u, v)) - np.log(h(-eps, u, v))) / (2.0 * eps)


def fgm_copula(theta: float, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Farlie-Gumbel-Morgenstern density ``1 + theta (1-2u)(1-2v)``."""
    return 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)


def conditional_projection(score: np.ndarray) -> np.ndarray:
    """``l - E[l | X] - E[l | Y] + E[l]`` for the uniform base density.

    Conditional expectations are row and column means of the midpoint grid.
    For a centered score the grand-mean term is zero and this is
    ``l - E[l|X] - E[l|Y]``; keeping it makes every row and column mean of
    the output vanish for any input.
    """
    s = np.asarray(score, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("score grid must be square")
    return s - s.mean(axis=1, keepdims=True) - s.mean(axis=0, keepdims=True) + s.mean()


def grid_lookup(grid: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    m = grid.shape[0]
    i = np.minimum((u * m).astype(np.int64), m - 1)
    j = np.minimum((v * m).astype(np.int64), m - 1)
    return grid[i, j]


def splittable_covariance(score_grid: np.ndarray, q_x: Callable[[np.ndarray], float],
                          q_y: Callable[[np.ndarray], float], n: int, reps: int,
                          rng: RngSeed) -> tuple[float, float]:
    """``Cov(q_x(U) + q_y(V), sum score(U_i, V_i))`` under independent uniforms.

    Returns (estimate, standard error).  With ``score_grid`` the projected
    efficient score this covariance is zero for every choice of ``q_x, q_y``.
    """
    T = np.empty(reps)
    S = np.empty(reps)
    for i in range(reps):
        g = rng.replicate(i)
        u, v = g.random(n), g.random(n)
        T[i] = q_x(u) + q_y(v)
        S[i] = grid_lookup(score_grid, u, v).sum()
    return _cov_se(T, S)


def rank_sum_split(u: np.ndarray) -> float:
    """An example x-only rank statistic: sum of squared normalized ranks."""
    r = rank_counts(u) / u.size
    return float((r**2).sum())
