"""Sample correlation coefficients and population oracles for discrete laws.

Tie policy
----------
x-ties are broken by a seeded shuffle inside each tie group for the
Chatterjee coefficient; the isotonic coefficient instead forces its fit to be
constant on each x-tie group.  y-ties are not randomized: every coefficient
uses the empirical-cdf rank ``n * G_n(y) = #{j : y_j <= y}``, which counts
ties with multiplicity.  On tie-free data this is the usual rank 1..n.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .isotonic import isotonic_with_groups, pava
from .rankcore import RngSeed, Sample, SampleError, TieReport, rank_counts, x_order


class DegenerateError(ValueError):
    """A marginal is constant, so the coefficient is undefined."""


def _ordered_ranks(sample: Sample, rng: RngSeed) -> tuple[np.ndarray, TieReport]:
    sample.require(2)
    r = rank_counts(sample.y)
    if r.min() == sample.n:
        raise DegenerateError("degenerate Y")
    order, ties = x_order(sample, rng)
    return r[order], ties


def _cn_from_ranks(r: np.ndarray) -> float:
    n = r.size
    s = int(np.abs(np.diff(r)).sum())
    # one rounding: 3s and n^2-1 are exact integers
    return 1.0 - 3.0 * s / (n * n - 1)


def _cmon_from_ranks(r: np.ndarray, ties: TieReport) -> tuple[float, np.ndarray]:
    rf = r.astype(float)
    fit = isotonic_with_groups(rf, ties)
    m = rf.sum() / rf.size
    var_r = np.mean((rf - m) ** 2)
    var_z = np.mean((fit.fitted - m) ** 2)
    return min(1.0, max(0.0, float(var_z / var_r))), fit.fitted


def chatterjee_cn(sample: Sample, rng: RngSeed) -> float:
    """``1 - 3 sum |r_{i+1} - r_i| / (n^2 - 1)`` along the x order."""
    r, _ = _ordered_ranks(sample, rng)
    return _cn_from_ranks(r)


def cmon_hat(sample: Sample, rng: RngSeed) -> float:
    """Isotonic correlation: ``Var_n(z) / Var_n(G_n(Y))``.

    ``z`` is the isotonic regression of the y-ranks on x, constant across
    each x-tie group.  The denominator is the empirical variance of the ranks,
    which equals ``(1 - 1/n^2)/12`` when y has no ties.  ``rng`` only fixes
    the order within x-ties, which cannot change the result.
    """
    r, ties = _ordered_ranks(sample, rng)
    return _cmon_from_ranks(r, ties)[0]


def cmon_fit(sample: Sample, rng: RngSeed) -> tuple[np.ndarray, np.ndarray]:
    """Ordered ranks ``G_n(Y_(i))`` and their isotonic fit, for diagnostics."""
    r, ties = _ordered_ranks(sample, rng)
    _, fitted = _cmon_from_ranks(r, ties)
    return r / sample.n, fitted / sample.n


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    return float(np.clip(a @ b / math.sqrt((a @ a) * (b @ b)), -1.0, 1.0))


def spearman(sample: Sample) -> float:
    """Pearson correlation of the empirical-cdf ranks of x and y."""
    sample.require(2)
    rx = rank_counts(sample.x)
    ry = rank_counts(sample.y)
    if rx.min() == sample.n or ry.min() == sample.n:
        raise DegenerateError("constant ranks on a margin")
    return _pearson(rx.astype(float), ry.astype(float))


def combined(chatterjee: float, cmon: float, lam: float = 0.5) -> float:
    """``lam * chatterjee + (1 - lam) * sqrt(cmon)``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if cmon < 0:
        raise ValueError("cmon must be nonnegative")
    return lam * chatterjee + (1.0 - lam) * math.sqrt(cmon)


@dataclass(frozen=True)
class CorrelationReport:
    chatterjee: float
    cmon: float
    cmon_sqrt: float
    spearman: float
    n: int
    seed: RngSeed
    combined_lambda: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed.seed,
            "stream": self.seed.stream,
            "chatterjee": self.chatterjee,
            "cmon": self.cmon,
            "cmon_sqrt": self.cmon_sqrt,
            "spearman": self.spearman,
            "combined": {repr(float(k)): v for k, v in sorted(self.combined_lambda.items())},
        }


def correlation_report(sample: Sample, rng: RngSeed, lambdas=(0.5,)) -> CorrelationReport:
    """All coefficients from a single sort of the sample."""
    r, ties = _ordered_ranks(sample, rng)
    cn = _cn_from_ranks(r)
    cm, _ = _cmon_from_ranks(r, ties)
    try:
        cs = spearman(sample)
    except DegenerateError:
        cs = float("nan")
    comb = {float(lam): combined(cn, cm, lam) for lam in lambdas}
    return CorrelationReport(cn, cm, math.sqrt(cm), cs, sample.n, rng, comb)


# ---------------------------------------------------------------------------
# population versions on finite supports


@dataclass(frozen=True)
class DiscreteJoint:
    """Finite-support joint pmf; ``pmf[i, j] = P(X = x[i], Y = y[j])``."""

    x: np.ndarray
    y: np.ndarray
    pmf: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        p = np.asarray(self.pmf, dtype=float)
        if p.shape != (x.size, y.size):
            raise ValueError(f"pmf shape {p.shape} does not match supports ({x.size}, {y.size})")
        if np.unique(x).size != x.size or np.unique(y).size != y.size:
            raise ValueError("support points must be distinct")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("pmf must be nonnegative and sum to 1")
        ix, iy = np.argsort(x), np.argsort(y)
        object.__setattr__(self, "x", x[ix])
        object.__setattr__(self, "y", y[iy])
        object.__setattr__(self, "pmf", p[np.ix_(ix, iy)])

    @property
    def px(self) -> np.ndarray:
        return self.pmf.sum(axis=1)

    @property
    def py(self) -> np.ndarray:
        return self.pmf.sum(axis=0)

    @classmethod
    def independent(cls, x, px, y, py) -> "DiscreteJoint":
        return cls(x, y, np.outer(px, py))


def _check_nondegenerate(p: np.ndarray, name: str) -> None:
    if np.max(p) >= 1.0 - 1e-15:
        raise DegenerateError(f"degenerate {name}")


def population_c(joint: DiscreteJoint) -> float:
    """Chatterjee's population coefficient for a finite-support law."""
    py, px = joint.py, joint.px
    _check_nondegenerate(py, "Y")
    keep = px > 0
    cond = joint.pmf[keep] / px[keep, None]
    # tail[i, j] = P(Y >= y_j | X = x_i)
    tail = np.cumsum(cond[:, ::-1], axis=1)[:, ::-1]
    ptail = np.cumsum(py[::-1])[::-1]
    num = np.sum(py * (px[keep, None] * (tail - ptail) ** 2).sum(axis=0))
    den = np.sum(py * ptail * (1 - ptail))
    return float(num / den)


def population_cmon(joint: DiscreteJoint) -> float:
    """Isotonic population coefficient ``Var(P m) / Var(G(Y))``.

    ``m(x) = E[G(Y) | X = x]`` is projected onto nondecreasing functions of x
    in ``L^2(P_X)`` by weighted PAVA.
    """
    py, px = joint.py, joint.px
    _check_nondegenerate(py, "Y")
    G = np.cumsum(py)
    keep = px > 0
    m = (joint.pmf[keep] @ G) / px[keep]
    proj = pava(m, px[keep]).fitted
    mean_g = py @ G
    var_g = py @ (G - mean_g) ** 2
    var_p = px[keep] @ (proj - mean_g) ** 2
    return float(min(1.0, var_p / var_g))


def population_spearman(joint: DiscreteJoint) -> float:
    """``corr(F(X), G(Y))`` under the joint pmf."""
    px, py = joint.px, joint.py
    _check_nondegenerate(px, "X")
    _check_nondegenerate(py, "Y")
    F, G = np.cumsum(px), np.cumsum(py)
    ef, eg = px @ F, py @ G
    cov = (F - ef) @ joint.pmf @ (G - eg)
    vf = px @ (F - ef) ** 2
    vg = py @ (G - eg) ** 2
    return float(cov / math.sqrt(vf * vg))


__all__ = [
    "CorrelationReport", "DegenerateError", "DiscreteJoint", "SampleError",
    "chatterjee_cn", "cmon_fit", "cmon_hat", "combined", "correlation_report",
    "population_c", "population_cmon", "population_spearman", "spearman",
]
