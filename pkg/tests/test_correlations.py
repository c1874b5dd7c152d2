import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monocorr.correlations import (
    DegenerateError, DiscreteJoint, chatterjee_cn, cmon_fit, cmon_hat, combined,
    correlation_report, population_c, population_cmon, population_spearman, spearman,
)
from monocorr.rankcore import Sample
from monocorr.rng import RngSeed

SEED = RngSeed(17)


def agreement_model(p=0.75):
    """X ~ Bernoulli(1/2); Y = X with probability p, else 1 - X."""
    return DiscreteJoint([0, 1], [0, 1], np.array([[p, 1 - p], [1 - p, p]]) / 2)


def jittered_agreement_model(k, p=0.75, scale=0.5):
    """Agreement model with Y + scale * U, U uniform, discretized on k atoms per level."""
    offs = scale * (np.arange(k) + 0.5) / k
    y = np.concatenate([offs, 1.0 + offs])
    base = np.array([[p, 1 - p], [1 - p, p]]) / 2
    pmf = np.repeat(base, k, axis=1) / k
    return DiscreteJoint([0, 1], y, pmf)


def spearman_direct(x, y):
    """Sum of (i - (n+1)/2) S_i over sum of (i - (n+1)/2)^2, S_i the integer y-rank along x."""
    n = len(x)
    ry = np.argsort(np.argsort(y)) + 1
    s = ry[np.argsort(x)]
    c = np.arange(1, n + 1) - (n + 1) / 2
    return float(c @ s / (c @ c))


def population_cmon_bruteforce(joint, step=0.005):
    """Minimize E(G(Y) - h(X))^2 over nondecreasing h on a grid (3-point X support)."""
    G = np.cumsum(joint.py)
    px = joint.px
    m = joint.pmf @ G / px
    grid = np.arange(0, 1 + step / 2, step)
    a, b, c = np.meshgrid(grid, grid, grid, indexing="ij")
    ok = (a <= b) & (b <= c)
    loss = px[0] * (m[0] - a) ** 2 + px[1] * (m[1] - b) ** 2 + px[2] * (m[2] - c) ** 2
    loss = np.where(ok, loss, np.inf)
    i = np.unravel_index(np.argmin(loss), loss.shape)
    h = np.array([grid[i[0]], grid[i[1]], grid[i[2]]])
    mg = joint.py @ G
    return float(px @ (h - mg) ** 2 / (joint.py @ (G - mg) ** 2))


class TestChatterjee:
    def test_increasing_n5(self):
        s = Sample(np.arange(5.0), np.arange(5.0) * 2)
        assert chatterjee_cn(s, SEED) == 0.5

    def test_rank_sequence_132(self):
        assert chatterjee_cn(Sample([1, 2, 3], [1, 3, 2]), SEED) == -1 / 8

    @pytest.mark.parametrize("y", [[1, 2], [2, 1]])
    def test_n2(self, y):
        assert chatterjee_cn(Sample([0, 1], y), SEED) == 0.0

    def test_constant_y(self):
        with pytest.raises(DegenerateError, match="degenerate Y"):
            chatterjee_cn(Sample([1, 2, 3], [4, 4, 4]), SEED)

    @pytest.mark.parametrize("n", [2, 10, 1000, 10_000])
    def test_monotone_exact(self, n):
        x = np.random.default_rng(n).standard_normal(n)
        assert chatterjee_cn(Sample(x, x**3), SEED) == 1 - 3 / (n + 1)


class TestCmon:
    def test_increasing(self):
        assert cmon_hat(Sample([1, 2, 3, 4], [1, 5, 6, 9]), SEED) == 1.0

    def test_decreasing(self):
        assert cmon_hat(Sample([1, 2, 3, 4], [9, 6, 5, 1]), SEED) == 0.0

    def test_three_point_example(self):
        s = Sample([1, 2, 3], [1, 3, 2])
        r, z = cmon_fit(s, SEED)
        assert np.allclose(r, [1 / 3, 1, 2 / 3])
        assert np.allclose(z, [1 / 3, 5 / 6, 5 / 6])
        assert np.var(z) == pytest.approx(1 / 18, abs=1e-15)
        assert cmon_hat(s, SEED) == pytest.approx(0.75, abs=1e-15)

    def test_constant_y(self):
        with pytest.raises(DegenerateError, match="degenerate Y"):
            cmon_hat(Sample([1, 2], [3, 3]), SEED)

    def test_x_ties_force_constant(self):
        s = Sample([1, 1, 2, 2], [1, 2, 3, 4])
        r, z = cmon_fit(s, SEED)
        assert z[0] == z[1] and z[2] == z[3]
        assert cmon_hat(s, RngSeed(1)) == cmon_hat(s, RngSeed(2))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=2, max_size=40))
    def test_bounds_and_mean_identity(self, rows):
        s = Sample.from_pairs(rows)
        if np.unique(s.y).size == 1:
            return
        c = cmon_hat(s, SEED)
        assert 0.0 <= c <= 1.0
        r, z = cmon_fit(s, SEED)
        assert abs(z.mean() - r.mean()) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40, unique=True))
    def test_one_iff_nondecreasing(self, y):
        x = np.arange(len(y), dtype=float)
        s = Sample(x, y)
        c = cmon_hat(s, SEED)
        if np.all(np.diff(y) > 0):
            assert c == 1.0
        else:
            assert c < 1.0


class TestSpearman:
    def test_increasing(self):
        assert spearman(Sample([1, 2, 3], [2, 5, 9])) == 1.0

    def test_decreasing(self):
        assert spearman(Sample([1, 2, 3], [9, 5, 2])) == -1.0

    def test_rank_pairs(self):
        assert spearman(Sample([1, 2, 3], [2, 1, 3])) == pytest.approx(0.5, abs=1e-15)

    def test_constant_margin(self):
        with pytest.raises(DegenerateError):
            spearman(Sample([1, 1, 1], [1, 2, 3]))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 60), st.integers(0, 10**6))
    def test_tie_free_direct_formula(self, n, seed):
        g = np.random.default_rng(seed)
        x, y = g.standard_normal(n), g.standard_normal(n)
        assert spearman(Sample(x, y)) == pytest.approx(spearman_direct(x, y), abs=1e-12)


class TestCombined:
    @pytest.mark.parametrize("args,want", [((1, 1, 0.5), 1.0), ((0, 0.25, 0.5), 0.25), ((0.2, 0.09, 1), 0.2)])
    def test_examples(self, args, want):
        assert combined(*args) == want

    @pytest.mark.parametrize("lam", [-0.1, 1.1])
    def test_lambda_range(self, lam):
        with pytest.raises(ValueError):
            combined(0.1, 0.1, lam)


class TestRankInvariance:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(3, 200), st.integers(0, 10**6), st.booleans())
    def test_transforms(self, n, seed, tied):
        g = np.random.default_rng(seed)
        x = g.integers(0, 5, n).astype(float) if tied else g.standard_normal(n)
        y = x + g.standard_normal(n)
        base = Sample(x, y)
        for s in (Sample(np.exp(x), y), Sample(x, y**3 + 2 * y), Sample(2 * x + 7, np.arctan(y))):
            assert chatterjee_cn(s, SEED) == chatterjee_cn(base, SEED)
            assert cmon_hat(s, SEED) == cmon_hat(base, SEED)
            assert spearman(s) == spearman(base)


class TestReport:
    def test_fields(self):
        s = Sample([1, 2, 3, 4], [1, 3, 2, 4])
        rep = correlation_report(s, SEED, (0.5, 1.0))
        assert rep.chatterjee == chatterjee_cn(s, SEED)
        assert rep.cmon == cmon_hat(s, SEED)
        assert rep.cmon_sqrt == math.sqrt(rep.cmon)
        assert rep.combined_lambda[1.0] == rep.chatterjee
        d = rep.to_dict()
        assert set(d["combined"]) == {"0.5", "1.0"}


class TestPopulation:
    def test_independence(self):
        j = DiscreteJoint.independent([0, 1, 2], [0.2, 0.3, 0.5], [0, 1], [0.4, 0.6])
        assert population_c(j) == pytest.approx(0, abs=1e-15)
        assert population_cmon(j) == pytest.approx(0, abs=1e-15)
        assert population_spearman(j) == pytest.approx(0, abs=1e-15)

    def test_identity_law(self):
        j = DiscreteJoint([0, 1], [0, 1], np.diag([0.5, 0.5]))
        assert population_c(j) == pytest.approx(1, abs=1e-15)
        assert population_cmon(j) == pytest.approx(1, abs=1e-15)
        j3 = DiscreteJoint([0, 1, 2], [0, 1, 2], np.eye(3) / 3)
        assert population_spearman(j3) == pytest.approx(1, abs=1e-15)

    def test_agreement_model_c(self):
        assert population_c(agreement_model()) == pytest.approx(0.25, abs=1e-15)

    def test_agreement_model_cmon(self):
        # m = (5/8, 7/8): Var m = 1/64, Var G(Y) = 1/16
        assert population_cmon(agreement_model()) == pytest.approx(0.25, abs=1e-15)

    def test_agreement_model_spearman_exhaustive(self):
        j = agreement_model()
        F, G = np.cumsum(j.px), np.cumsum(j.py)
        e = lambda f: sum(j.pmf[a, b] * f(F[a], G[b]) for a in range(2) for b in range(2))
        ef, eg = e(lambda u, v: u), e(lambda u, v: v)
        cov = e(lambda u, v: u * v) - ef * eg
        vf, vg = e(lambda u, v: u * u) - ef**2, e(lambda u, v: v * v) - eg**2
        want = cov / math.sqrt(vf * vg)
        assert want == pytest.approx(0.5, abs=1e-15)
        assert population_spearman(j) == pytest.approx(want, abs=1e-15)

    def test_pooled_conditional_means(self):
        # three x atoms, uniform weights, Y binary with G = (p0, 1)
        pmf = np.array([[0.2, 0.8], [0.6, 0.4], [0.4, 0.6]]) / 3
        j = DiscreteJoint([0, 1, 2], [0, 1], pmf)
        G = np.cumsum(j.py)
        m = pmf @ G * 3
        assert m[0] > m[1] and m[2] > m[1] and m[0] > m[2]
        assert population_cmon(j) == pytest.approx(0, abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_cmon_matches_grid_search(self, seed):
        g = np.random.default_rng(seed)
        pmf = g.random((3, 4))
        pmf /= pmf.sum()
        j = DiscreteJoint([0, 1, 2], [0, 1, 2, 3], pmf)
        assert population_cmon(j) == pytest.approx(population_cmon_bruteforce(j), abs=0.01)

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            population_cmon(DiscreteJoint([0, 1], [5], np.array([[0.5], [0.5]])))

    def test_bad_pmf(self):
        with pytest.raises(ValueError):
            DiscreteJoint([0, 1], [0, 1], np.full((2, 2), 0.3))

    def test_jittered_agreement_model(self):
        # continuous Y: m = (3/8, 5/8), Var m = 1/64, Var G(Y) = 1/12
        got = population_cmon(jittered_agreement_model(400))
        assert got == pytest.approx(3 / 16, abs=1e-5)


class TestConsistency:
    def test_jittered_sample(self):
        g = np.random.default_rng(8)
        n = 20_000
        x = g.integers(0, 2, n)
        agree = g.random(n) < 0.75
        y = np.where(agree, x, 1 - x) + 0.5 * g.random(n)
        assert abs(cmon_hat(Sample(x, y), SEED) - 3 / 16) < 0.02

    def test_tied_sample(self):
        g = np.random.default_rng(9)
        n = 20_000
        x = g.integers(0, 2, n)
        y = np.where(g.random(n) < 0.75, x, 1 - x)
        assert abs(cmon_hat(Sample(x, y), SEED) - population_cmon(agreement_model())) < 0.02
