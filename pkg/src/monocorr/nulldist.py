"""Null laws under independence with continuous marginals, p-values, and
permutation tests.

Upper-tail tests are used for the unsigned coefficients (Chatterjee,
isotonic, their combination); the Spearman family is tested two-sided.

Isotonic mixture law
--------------------
Under the null, ``n * cmon`` is the between-block sum of squares of a
uniform random partition of the standardized rank grid into the cycles of a
uniform permutation.  Given ``N_n`` cycles this is close to
``n/(n-1) * chi2(N_n - 1)``, and that law reproduces the exact null mean
``n (H_n - 1) / (n - 1)``.  The uncorrected ``chi2(N_n)`` mixture has the
right first-order asymptotics but overstates the mean by about one at any
finite n; it is kept available as ``corrected=False``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special, stats

from . import correlations as corr
from .rankcore import RngSeed, Sample, cycle_count_pmf, harmonic, sample_cycle_counts

P_FLOOR = 1e-300

CN_NULL_VARIANCE = 2.0 / 5.0
CMON_CLT_VARIANCE = 3.0
SPEARMAN_NULL_VARIANCE = 1.0


def _clamp(p: float) -> float:
    return float(min(1.0, max(P_FLOOR, p)))


def upper_tail(z: float) -> float:
    """``1 - Phi(z)`` without cancellation (Cephes ``ndtr``)."""
    return float(special.ndtr(-z))


def null_variance_cn() -> float:
    return CN_NULL_VARIANCE


def combined_null_variance(lam: float) -> float:
    """Limit variance of ``sqrt(n) (lam Cn + (1-lam) sqrt(cmon) - centering)``."""
    return CN_NULL_VARIANCE * lam**2 + (CMON_CLT_VARIANCE / 4.0) * (1.0 - lam) ** 2


def spearman_combo_null_variance(lam: float) -> float:
    """Limit variance of ``sqrt(n) (lam Cn + (1-lam) C_S)``.

    ``sqrt(n) Cn`` and ``sqrt(n) C_S`` are asymptotically independent with
    variances 2/5 and 1; ``C_S`` is ``(12/n) sum (U-1/2)(V-1/2)`` to first
    order, and ``Var(12 (U-1/2)(V-1/2)) = 1``.
    """
    return CN_NULL_VARIANCE * lam**2 + SPEARMAN_NULL_VARIANCE * (1.0 - lam) ** 2


# 23/80 = (1/4)(2/5) + (1/16)(3)
assert combined_null_variance(0.5) == 0.25 * 0.4 + 3.0 / 16.0


@dataclass(frozen=True)
class NullLaw:
    kind: str  # "normal" | "cycle-mixture" | "permutation"
    params: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        v = self.params.get("variance")
        if v is not None and not v > 0:
            raise ValueError("null variance must be positive")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, **self.params}
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class TestResult:
    statistic: float
    standardized: float
    p_value: float
    law: NullLaw
    n: int
    name: str = ""
    se: float | None = None
    alternative: str = "greater"

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "statistic": self.statistic,
            "standardized": self.standardized,
            "p_value": self.p_value,
            "alternative": self.alternative,
            "n": self.n,
            "law": self.law.to_dict(),
        }
        if self.se is not None:
            d["p_value_se"] = self.se
        return d


def standardize_cn(cn: float, n: int) -> float:
    return math.sqrt(n) * cn / math.sqrt(CN_NULL_VARIANCE)


def pvalue_cn(cn: float, n: int) -> TestResult:
    if n < 2:
        raise ValueError("need n >= 2")
    z = standardize_cn(cn, n)
    law = NullLaw("normal", {"mean": 0.0, "variance": CN_NULL_VARIANCE})
    return TestResult(cn, z, _clamp(upper_tail(z)), law, n, "cn")


def standardize_cmon(cmon: float, n: int) -> float:
    logn = math.log(n)
    return (n * cmon - logn) / math.sqrt(CMON_CLT_VARIANCE * logn)


def pvalue_cmon_clt(cmon: float, n: int) -> TestResult:
    """Normal approximation to ``(n cmon - log n)/sqrt(log n)``.

    Convergence is logarithmic in n; prefer :func:`pvalue_cmon_mixture`.
    """
    if n < 3:
        raise ValueError("CLT regime needs n >= 3")
    z = standardize_cmon(cmon, n)
    law = NullLaw("normal", {"mean": 0.0, "variance": CMON_CLT_VARIANCE},
                  note="asymptotic, slow convergence")
    return TestResult(cmon, z, _clamp(upper_tail(z)), law, n, "cmon")


def _mixture_shape(n: int, corrected: bool) -> tuple[float, int]:
    if corrected and n >= 2:
        return n / (n - 1), -1
    return 1.0, 0


def mixture_moments(n: int, corrected: bool = True) -> tuple[float, float]:
    """Mean and variance of the cycle-count chi-square mixture."""
    scale, off = _mixture_shape(n, corrected)
    pmf = cycle_count_pmf(n)
    k = np.arange(pmf.size) + off
    k = np.maximum(k, 0)
    mean = scale * (pmf @ k)
    second = scale**2 * (pmf @ (2 * k + k**2))
    return float(mean), float(second - mean**2)


def mixture_sf(t: float, n: int, corrected: bool = True) -> float:
    """Exact ``P(mixture >= t)`` by summing chi-square tails over the pmf."""
    if t <= 0:
        return 1.0
    scale, off = _mixture_shape(n, corrected)
    pmf = cycle_count_pmf(n)
    df = np.arange(pmf.size) + off
    pos = df > 0
    return float(pmf[pos] @ stats.chi2.sf(t / scale, df[pos]))


def sample_mixture(n: int, size: int, gen: np.random.Generator, corrected: bool = True) -> np.ndarray:
    scale, off = _mixture_shape(n, corrected)
    df = sample_cycle_counts(n, size, gen) + off
    out = np.zeros(size)
    pos = df > 0
    out[pos] = 2.0 * gen.standard_gamma(df[pos] / 2.0)
    return scale * out


def pvalue_cmon_mixture(cmon: float, n: int, reps: int, rng: RngSeed,
                        corrected: bool = True) -> TestResult:
    """Monte Carlo p-value of ``n * cmon`` against the cycle-count mixture."""
    if reps < 1000:
        raise ValueError("mixture test needs reps >= 1000")
    draws = sample_mixture(n, reps, rng.generator(), corrected)
    t = n * cmon
    p = float(np.mean(draws >= t))
    mean, var = mixture_moments(n, corrected)
    scale, off = _mixture_shape(n, corrected)
    law = NullLaw("cycle-mixture", {"n": n, "scale": scale, "df_offset": off,
                                    "mean": mean, "variance": var, "reps": reps})
    return TestResult(cmon, (t - mean) / math.sqrt(var), _clamp(p), law, n, "cmon",
                      se=math.sqrt(p * (1 - p) / reps))


def combined_centering(n: int, lam: float) -> float:
    return (1.0 - lam) * math.sqrt(math.log(n) / n)


def pvalue_combined(ctilde: float, n: int, lam: float = 0.5) -> TestResult:
    """Normal limit of ``lam Cn + (1-lam) sqrt(cmon)`` centered at ``(1-lam) sqrt(log n / n)``.

    The ``sqrt(cmon)`` part inherits the logarithmic convergence of the
    isotonic CLT; at n near 1000 the test rejects about 3% of null samples at
    level 0.05.  The permutation test is exact.
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]; use the mixture test for lambda = 0")
    var = combined_null_variance(lam)
    z = math.sqrt(n) * (ctilde - combined_centering(n, lam)) / math.sqrt(var)
    law = NullLaw("normal", {"mean": 0.0, "variance": var, "lambda": lam})
    return TestResult(ctilde, z, _clamp(upper_tail(z)), law, n, "combined")


def pvalue_spearman_combo(cn: float, cs: float, lam: float, n: int) -> TestResult:
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    var = spearman_combo_null_variance(lam)
    stat = lam * cn + (1.0 - lam) * cs
    z = math.sqrt(n) * stat / math.sqrt(var)
    p = 2.0 * upper_tail(abs(z))
    law = NullLaw("normal", {"mean": 0.0, "variance": var, "lambda": lam})
    return TestResult(stat, z, _clamp(p), law, n, "spearman-combo", alternative="two-sided")


# ---------------------------------------------------------------------------
# permutation tests


def _stat_cn(s, rng, lam):
    return corr.chatterjee_cn(s, rng)


def _stat_cmon(s, rng, lam):
    return corr.cmon_hat(s, rng)


def _stat_combined(s, rng, lam):
    return corr.combined(corr.chatterjee_cn(s, rng), corr.cmon_hat(s, rng), lam)


def _stat_spearman(s, rng, lam):
    return corr.spearman(s)


def _stat_abs_spearman(s, rng, lam):
    return abs(corr.spearman(s))


STATISTICS = {
    "cn": _stat_cn,
    "cmon": _stat_cmon,
    "combined": _stat_combined,
    "spearman": _stat_spearman,
    "abs-spearman": _stat_abs_spearman,
}


def permutation_test(statistic: str, sample: Sample, reps: int, rng: RngSeed,
                     lam: float = 0.5) -> TestResult:
    """Add-one permutation p-value, permuting the y column.

    Replicate ``i`` draws its permutation from ``rng.replicate(i)``; x-ties are
    always broken with the base stream of ``rng``, so observed and permuted
    statistics share one tie-breaking rule.
    """
    if reps < 99:
        raise ValueError("permutation test needs reps >= 99")
    try:
        fn = STATISTICS[statistic]
    except KeyError:
        raise ValueError(f"unknown statistic {statistic!r}; choose from {sorted(STATISTICS)}") from None
    observed = fn(sample, rng, lam)
    perm_vals = np.empty(reps)
    for i in range(reps):
        y = sample.y[rng.replicate(i).permutation(sample.n)]
        perm_vals[i] = fn(Sample(sample.x, y), rng, lam)
    hits = int(np.count_nonzero(perm_vals >= observed))
    p = (1 + hits) / (reps + 1)
    sd = perm_vals.std()
    z = (observed - perm_vals.mean()) / sd if sd > 0 else 0.0
    law = NullLaw("permutation", {"reps": reps, "statistic": statistic})
    return TestResult(observed, float(z), p, law, sample.n, statistic)


# ---------------------------------------------------------------------------
# null simulation


NULL_COLUMNS = ("sqrt_n_cn", "n_cmon", "sqrt_n_cs", "combined")


def simulate_null(n: int, reps: int, rng: RngSeed, lam: float = 0.5) -> dict[str, np.ndarray]:
    """Draws of the scaled statistics under a continuous independent null.

    Replicate ``i`` samples ``X, Y ~ Unif(0,1)`` independently from
    ``rng.replicate(i)``.  Returns one array per name in ``NULL_COLUMNS``;
    ``combined`` is ``lam Cn + (1-lam) sqrt(cmon)`` unscaled.
    """
    out = {k: np.empty(reps) for k in NULL_COLUMNS}
    rn = math.sqrt(n)
    tie_seed = rng.with_stream(rng.stream + 1)
    for i in range(reps):
        g = rng.replicate(i)
        s = Sample(g.random(n), g.random(n))
        rep = corr.correlation_report(s, tie_seed, (lam,))
        out["sqrt_n_cn"][i] = rn * rep.chatterjee
        out["n_cmon"][i] = n * rep.cmon
        out["sqrt_n_cs"][i] = rn * rep.spearman
        out["combined"][i] = rep.combined_lambda[float(lam)]
    return out


def exact_null_mean_n_cmon(n: int) -> float:
    """``E[n cmon] = n (H_n - 1)/(n - 1)`` under the continuous null."""
    return n * (harmonic(n) - 1.0) / (n - 1)
