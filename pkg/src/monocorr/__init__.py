"""Chatterjee, isotonic and Spearman rank correlations with independence tests."""
from .correlations import (
    CorrelationReport, DegenerateError, DiscreteJoint, chatterjee_cn, cmon_hat, combined,
    correlation_report, population_c, population_cmon, population_spearman, spearman,
)
from .isotonic import IsotonicFit, greatest_convex_minorant, isotonic_with_groups, pava
from .nulldist import (
    TestResult, permutation_test, pvalue_cmon_clt, pvalue_cmon_mixture, pvalue_cn,
    pvalue_combined, pvalue_spearman_combo,
)
from .rankcore import Permutation, Sample, empirical_cdf, quantile, y_ranks
from .rng import RngSeed

__version__ = "0.1.0"
