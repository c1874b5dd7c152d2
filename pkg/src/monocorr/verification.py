"""Exact self-checks run by ``monocorr verify``."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from . import permlab
from .isotonic import (
    cumsum0, cumsum0_exact, greatest_convex_minorant, greatest_convex_minorant_exact,
    pava, pava_exact, slopes_as_isotonic,
)
from .rankcore import RngSeed, cycle_count_pmf, random_permutation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"check": self.name, "passed": bool(self.passed), "detail": self.detail}


def check_bijection(n: int) -> CheckResult:
    rep = permlab.verify_bijection(n)
    return CheckResult(f"bijection_n{n}", rep.ok,
                       f"{rep.permutations} permutations, output cycle counts {rep.output_cycle_counts}")


def check_cycle_lemma(n: int) -> CheckResult:
    got = permlab.expected_cycle_counts(n)
    want = [Fraction(1, i) for i in range(1, n + 1)]
    return CheckResult(f"cycle_lengths_n{n}", got == want,
                       "E[#cycles of length i] = " + ", ".join(str(g) for g in got))


def check_cycle_count_pmf(n: int) -> CheckResult:
    stir = permlab.stirling_first_unsigned(n)
    exact = np.array(stir, dtype=float) / math.factorial(n)
    pmf = cycle_count_pmf(n)
    err = float(np.max(np.abs(pmf - exact[: pmf.size])))
    return CheckResult(f"cycle_count_pmf_n{n}", err < 1e-14, f"max abs error {err:.3g}")


def check_gcm_pava_exact(count: int, max_len: int, rng: RngSeed) -> CheckResult:
    bad = 0
    for r in range(count):
        g = rng.replicate(r)
        n = int(g.integers(1, max_len + 1))
        vals = [int(v) for v in g.integers(-50, 51, size=n)]
        gcm = greatest_convex_minorant_exact(cumsum0_exact(vals))
        if slopes_as_isotonic(gcm, n) != pava_exact(vals):
            bad += 1
    return CheckResult("gcm_slopes_equal_pava_exact", bad == 0,
                       f"{count} integer inputs up to length {max_len}, {bad} mismatches")


def check_gcm_pava_float(count: int, max_len: int, rng: RngSeed) -> CheckResult:
    worst = 0.0
    for r in range(count):
        g = rng.replicate(r)
        n = int(g.integers(1, max_len + 1))
        v = g.standard_normal(n)
        gcm = greatest_convex_minorant(cumsum0(v))
        worst = max(worst, float(np.max(np.abs(np.asarray(slopes_as_isotonic(gcm)) - pava(v).fitted))))
    return CheckResult("gcm_slopes_equal_pava_float", worst <= 1e-12,
                       f"{count} gaussian inputs up to length {max_len}, max diff {worst:.3g}")


def check_cone_identities(count: int, rng: RngSeed) -> CheckResult:
    worst = 0.0
    for r in range(count):
        g = rng.replicate(r)
        n = int(g.integers(2, 200))
        v = g.standard_normal(n)
        w = g.uniform(0.1, 3.0, n)
        z = pava(v, w).fitted
        inner = abs(np.sum(w * v * z) - np.sum(w * z * z)) / max(1.0, np.sum(w * z * z))
        means = abs(np.sum(w * v) - np.sum(w * z)) / max(1.0, np.sum(np.abs(w * v)))
        worst = max(worst, inner, means)
    return CheckResult("cone_projection_identities", worst <= 1e-9,
                       f"{count} weighted inputs, max relative defect {worst:.3g}")


def check_f2_identity(count: int, n: int, rng: RngSeed) -> CheckResult:
    grid = permlab.standardized_grid(n)
    worst = 0.0
    for r in range(count):
        p = random_permutation(n, rng.replicate(r))
        d = abs(permlab.isotonic_sum_sq(p, grid) - permlab.f2(permlab.bohnenblust_spitzer(p), grid))
        worst = max(worst, d)
    return CheckResult("isotonic_sum_sq_equals_f2_of_bijection", worst < 1e-6,
                       f"{count} permutations at n={n}, max diff {worst:.3g}")


def run_exact_suite(max_n: int = 8, seed: int = 0) -> list[CheckResult]:
    rng = RngSeed(seed)
    out = []
    for n in range(1, min(max_n, permlab.MAX_BIJECTION_N) + 1):
        out.append(check_bijection(n))
    for n in range(1, min(max_n, permlab.MAX_CYCLE_COUNT_N) + 1):
        out.append(check_cycle_lemma(n))
        out.append(check_cycle_count_pmf(n))
    out.append(check_gcm_pava_exact(200, 300, rng.with_stream(1)))
    out.append(check_gcm_pava_float(200, 1000, rng.with_stream(2)))
    out.append(check_cone_identities(200, rng.with_stream(3)))
    out.append(check_f2_identity(50, 200, rng.with_stream(4)))
    return out
