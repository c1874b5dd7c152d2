from fractions import Fraction
import itertools
import math

import numpy as np
import pytest

from monocorr import permlab as pl
from monocorr.isotonic import cumsum0_exact, greatest_convex_minorant_exact, pava_exact, slopes_as_isotonic
from monocorr.nulldist import exact_null_mean_n_cmon
from monocorr.rankcore import CycleDecomposition, Permutation, cycle_decomposition, random_permutation
from monocorr.rng import RngSeed


class TestGrid:
    def test_n2(self):
        g = pl.standardized_grid(2)
        assert g.mu == 0.75 and g.sigma2 == 1 / 16
        assert g.x.tolist() == [-1.0, 1.0]

    @pytest.mark.parametrize("n", [2, 3, 10, 999])
    def test_normalization(self, n):
        x = pl.standardized_grid(n).x
        assert abs(x.sum()) <= 1e-10
        assert abs(np.mean(x**2) - 1) <= 1e-10

    def test_small_n(self):
        with pytest.raises(ValueError):
            pl.standardized_grid(1)


class TestCumsum:
    def test_examples(self):
        assert pl.cumsum_process(Permutation.identity(2), [-1, 1]).tolist() == [0, -1, 0]
        assert pl.cumsum_process(Permutation((2, 1)), [-1, 1]).tolist() == [0, 1, 0]

    def test_total_invariant(self):
        v = np.random.default_rng(0).standard_normal(7)
        for i in range(20):
            p = random_permutation(7, RngSeed(i))
            assert pl.cumsum_process(p, v)[-1] == pytest.approx(v.sum(), abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            pl.cumsum_process(Permutation.identity(3), [1, 2])


class TestPerturbation:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_distinct_subset_sums(self, n):
        v = pl.perturbed_grid(n).ints
        sums = {sum(c) for r in range(n + 1) for c in itertools.combinations(v, r)}
        assert len(sums) == 2**n

    def test_delta_bound(self):
        pv = pl.perturbed_grid(6)
        for i in range(1, 7):
            d = pv.delta(i)
            assert d == Fraction(1, 2**pl.DELTA0_EXP * 3**i)
            assert 0 < d <= Fraction(1, 2**pl.DELTA0_EXP)

    def test_radix_floor(self):
        with pytest.raises(ValueError):
            pl.perturbed_grid(4, radix=2)

    def test_degenerate_detected(self):
        with pytest.raises(pl.DegeneratePerturbation, match="degenerate perturbation"):
            pl.gcm_knots_checked([0, 1, 2, 3])


class TestBijection:
    def test_n2_identity(self):
        assert pl.bohnenblust_spitzer(Permutation.identity(2)) == Permutation.identity(2)

    def test_n2_swap(self):
        assert pl.bohnenblust_spitzer(Permutation((2, 1))) == Permutation((2, 1))

    def test_n3(self):
        rep = pl.verify_bijection(3)
        assert rep.bijective and rep.stirling_match
        assert rep.output_cycle_counts == {1: 2, 2: 3, 3: 1}

    def test_n1(self):
        assert pl.verify_bijection(1).ok

    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_exhaustive(self, n):
        rep = pl.verify_bijection(n)
        assert rep.permutations == math.factorial(n) and rep.ok

    @pytest.mark.parametrize("n", [4, 5, 6])
    def test_exhaustive_other_radix(self, n):
        assert pl.verify_bijection(n, radix=2 * n + 1).ok

    def test_cap(self):
        with pytest.raises(ValueError):
            pl.verify_bijection(8)

    def test_blocks_become_cycles(self):
        p = random_permutation(12, RngSeed(3))
        out = pl.bohnenblust_spitzer(p)
        for c in cycle_decomposition(out).cycles:
            # each output cycle is a contiguous run of the input word
            word = list(p.images)
            pos = sorted(word.index(v) for v in c)
            assert pos == list(range(pos[0], pos[0] + len(c)))
            block = word[pos[0]:pos[0] + len(c)]
            k = block.index(c[0])
            assert tuple(block[k:] + block[:k]) == c


class TestF1:
    def test_identity(self):
        assert pl.f1(Permutation.identity(5)) == 1.0

    def test_transposition(self):
        assert pl.f1(Permutation((2, 1))) == -1.0

    def test_three_cycle(self):
        assert pl.f1(Permutation((2, 3, 1))) == pytest.approx(-0.5, abs=1e-15)

    def test_tracks_chatterjee(self):
        # the wrap-around terms change the statistic by at most 2n per cycle
        for n in (20, 200, 1000):
            for i in range(20):
                p = random_permutation(n, RngSeed(n).replicate(i))
                q = pl.bohnenblust_spitzer(p)
                cycles = cycle_decomposition(q).count
                diff = abs(pl.chatterjee_of_permutation(p) - pl.f1(q))
                assert diff <= 6.0 * cycles * n / (n * n - 1)

    def test_mean_small(self):
        n, reps = 1000, 2000
        vals = np.array([pl.f1(random_permutation(n, RngSeed(1).replicate(i))) for i in range(reps)])
        assert abs(vals.mean()) <= 3 * vals.std(ddof=1) / math.sqrt(reps)


class TestF2:
    def test_identity(self):
        g = pl.standardized_grid(6)
        assert pl.f2(Permutation.identity(6), g) == pytest.approx(6, abs=1e-12)

    def test_full_cycle(self):
        g = pl.standardized_grid(5)
        assert pl.f2(Permutation((2, 3, 4, 5, 1)), g) == pytest.approx(0, abs=1e-12)

    def test_symmetric_pairs(self):
        g = pl.standardized_grid(4)
        cd = CycleDecomposition(4, ((1, 4), (2, 3)))
        assert pl.f2(cd, g) == pytest.approx(0, abs=1e-12)

    def test_isotonic_sum_sq_examples(self):
        g = pl.standardized_grid(7)
        assert pl.isotonic_sum_sq(Permutation.identity(7), g) == pytest.approx(7, abs=1e-12)
        assert pl.isotonic_sum_sq(Permutation(tuple(range(7, 0, -1))), g) == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_identity_exhaustive(self, n):
        g = pl.standardized_grid(n)
        for imgs in itertools.permutations(range(1, n + 1)):
            p = Permutation(imgs)
            assert abs(pl.isotonic_sum_sq(p, g) - pl.f2(pl.bohnenblust_spitzer(p), g)) <= 10 * n * 2.0**-20

    def test_identity_n1000(self):
        n = 1000
        g = pl.standardized_grid(n)
        for i in range(30):
            p = random_permutation(n, RngSeed(2).replicate(i))
            assert abs(pl.isotonic_sum_sq(p, g) - pl.f2(pl.bohnenblust_spitzer(p), g)) <= 10 * n * 2.0**-20


class TestExactSlopes:
    @pytest.mark.parametrize("n", [3, 5])
    def test_every_permutation(self, n):
        vals = pl.perturbed_grid(n).as_fractions()
        for imgs in itertools.permutations(range(n)):
            seq = [vals[i] for i in imgs]
            gcm = greatest_convex_minorant_exact(cumsum0_exact(seq))
            assert slopes_as_isotonic(gcm, n) == pava_exact(seq)


class TestCycleLemma:
    def test_n3(self):
        assert pl.expected_cycle_counts(3) == [1, Fraction(1, 2), Fraction(1, 3)]

    def test_n1(self):
        assert pl.expected_cycle_counts(1) == [1]

    def test_cap(self):
        with pytest.raises(ValueError):
            pl.expected_cycle_counts(9)

    def test_stirling(self):
        assert pl.stirling_first_unsigned(4) == [0, 6, 11, 6, 1]


class TestPairSimulation:
    @pytest.fixture(scope="class")
    @classmethod
    def draws(cls):
        return pl.null_pair_simulation(1000, 2000, RngSeed(2024))

    def test_sum_sq_mean(self, draws):
        col = draws[:, 1]
        se = col.std(ddof=1) / math.sqrt(col.size)
        assert abs(col.mean() - exact_null_mean_n_cmon(1000)) <= 3 * se

    def test_cn_variance(self, draws):
        assert abs(draws[:, 0].var(ddof=1) - 0.4) <= 0.04

    def test_reproducible(self):
        a = pl.null_pair_simulation(50, 100, RngSeed(5))
        assert np.array_equal(a, pl.null_pair_simulation(50, 100, RngSeed(5)))

    def test_reps_floor(self):
        with pytest.raises(ValueError):
            pl.null_pair_simulation(50, 99, RngSeed(5))
