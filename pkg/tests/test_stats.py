import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from tmpfc.errors import StatsError
from tmpfc.stats import (
    TrendAlternative,
    TrendMethod,
    bland_altman,
    clopper_pearson,
    diagnostic_metrics,
    jonckheere_terpstra,
    pearson,
    roc_auc,
    youden_threshold,
)


# --- Bland-Altman ---


def test_bland_altman_identity_pairs():
    report = bland_altman([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0])
    assert report.bias == 0.0
    assert report.sd_diff == 0.0
    assert report.loa_low == 0.0 and report.loa_high == 0.0


def test_bland_altman_hand_example():
    report = bland_altman([10, 20, 30], [12, 19, 33])
    assert report.bias == pytest.approx(-4.0 / 3.0, abs=1e-12)
    assert report.sd_diff == pytest.approx(math.sqrt(13.0 / 3.0), abs=1e-12)
    assert report.loa_low == pytest.approx(-4.0 / 3.0 - 1.96 * math.sqrt(13.0 / 3.0), abs=1e-9)
    assert report.loa_high == pytest.approx(-4.0 / 3.0 + 1.96 * math.sqrt(13.0 / 3.0), abs=1e-9)


def test_bland_altman_errors():
    with pytest.raises(StatsError) as err:
        bland_altman([1, 2, 3], [1, 2])
    assert err.value.code == "LENGTH_MISMATCH"
    with pytest.raises(StatsError) as err:
        bland_altman([1, 2], [1, 2])
    assert err.value.code == "TOO_FEW"


@given(st.lists(st.floats(-1e4, 1e4), min_size=3, max_size=40))
@settings(max_examples=80)
def test_bland_altman_loa_identity(diffs):
    a = np.asarray(diffs)
    b = np.zeros_like(a)
    try:
        report = bland_altman(a, b)
    except StatsError:  # constant input: pearson undefined
        return
    assert report.loa_low == report.bias - 1.96 * report.sd_diff
    assert report.loa_high == report.bias + 1.96 * report.sd_diff


def test_bland_altman_sd_matches_two_pass_oracle():
    rng = np.random.default_rng(5)
    a = rng.normal(100, 10, 25)
    b = a + rng.normal(-1, 2, 25)
    report = bland_altman(a, b)
    d = a - b
    mean = sum(d) / len(d)
    var = sum((x - mean) ** 2 for x in d) / (len(d) - 1)
    assert report.sd_diff == pytest.approx(math.sqrt(var), rel=1e-12)


# --- Pearson ---


def test_pearson_exact_linear():
    x = [1.0, 2.0, 3.0, 4.0]
    result = pearson(x, [2 * v + 1 for v in x])
    assert result.r == 1.0
    assert result.p == 0.0


def test_pearson_exact_antilinear():
    x = [1.0, 2.0, 3.0, 5.0]
    assert pearson(x, [-v for v in x]).r == -1.0


def test_pearson_hand_value():
    result = pearson([1, 2, 3, 4], [1, 3, 2, 4])
    assert result.r == pytest.approx(0.8, abs=1e-12)


def test_pearson_matches_scipy():
    rng = np.random.default_rng(2)
    x = rng.normal(size=30)
    y = 0.5 * x + rng.normal(size=30)
    result = pearson(x, y)
    want_r, want_p = sps.pearsonr(x, y)
    assert result.r == pytest.approx(want_r, abs=1e-12)
    assert result.p == pytest.approx(want_p, rel=1e-9)


def test_pearson_zero_variance_rejected():
    with pytest.raises(StatsError) as err:
        pearson([1, 1, 1], [1, 2, 3])
    assert err.value.code == "ZERO_VARIANCE"


@given(st.lists(st.floats(-100, 100), min_size=4, max_size=30),
       st.floats(0.1, 10), st.floats(-50, 50))
@settings(max_examples=60)
def test_pearson_affine_invariance(values, scale, offset):
    x = np.asarray(values)
    rng = np.random.default_rng(42)
    y = x + rng.normal(0, 1, x.size)
    try:
        base = pearson(x, y)
    except StatsError:
        return
    shifted = pearson(scale * x + offset, y)
    flipped = pearson(-x, y)
    assert shifted.r == pytest.approx(base.r, abs=1e-9)
    assert flipped.r == pytest.approx(-base.r, abs=1e-9)


# --- ROC / Youden ---


def test_roc_perfect_separation():
    roc = roc_auc([1, 2, 3, 4], [False, False, True, True])
    assert roc.auc == 1.0
    assert roc.youden_threshold == 3  # smallest positive-class score
    assert roc.youden_value == 1.0


def test_roc_interleaved():
    roc = roc_auc([1, 2, 3, 4], [False, True, False, True])
    assert roc.auc == 0.75
    thr, j = youden_threshold(roc)
    assert thr == 2 and j == pytest.approx(0.5)


def test_roc_all_tied_scores():
    roc = roc_auc([5, 5, 5, 5], [False, True, False, True])
    assert roc.auc == 0.5


def test_roc_single_class_rejected():
    with pytest.raises(StatsError) as err:
        roc_auc([1, 2], [True, True])
    assert err.value.code == "SINGLE_CLASS"


def mann_whitney_concordance(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else (0.5 if p == n else 0.0)
    return total / (len(pos) * len(neg))


def test_roc_auc_equals_concordance_on_random_data():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n = int(rng.integers(4, 50))
        scores = rng.integers(0, 10, n).astype(float)  # ties guaranteed
        labels = rng.random(n) < 0.5
        if labels.all() or not labels.any():
            continue
        roc = roc_auc(scores, labels)
        assert abs(roc.auc - mann_whitney_concordance(scores, labels)) < 1e-12


def test_youden_single_positive_at_max():
    roc = roc_auc([1, 2, 3, 9], [False, False, False, True])
    assert roc.youden_threshold == 9


# --- diagnostics ---


def test_diagnostic_perfect_prediction():
    labels = [True, False, True, False, True]
    report = diagnostic_metrics(labels, labels)
    assert report.sensitivity.value == 1.0
    assert report.specificity.value == 1.0
    assert report.ppv.value == 1.0
    assert report.npv.value == 1.0


def test_diagnostic_point_estimate_shape():
    predicted = [True] * 59 + [False] + [False] * 40
    actual = [True] * 60 + [False] * 40
    report = diagnostic_metrics(predicted, actual)
    assert report.tp == 59 and report.fn == 1
    assert report.sensitivity.value == pytest.approx(59 / 60)
    assert report.sensitivity.ci_low < 59 / 60 < report.sensitivity.ci_high


def test_diagnostic_undefined_metric_reported_as_none():
    report = diagnostic_metrics([False, False], [True, False])
    assert report.ppv is None
    assert report.sensitivity.value == 0.0


def binomial_ci_by_inversion(k, n, alpha=0.05):
    """Independent oracle: invert the exact binomial tails by bisection."""

    def solve(target_tail, lo, hi):
        for _ in range(200):
            mid = (lo + hi) / 2
            if target_tail(mid):
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2

    lower = 0.0 if k == 0 else solve(
        lambda p: sps.binom.sf(k - 1, n, p) < alpha / 2, 0.0, k / n)
    upper = 1.0 if k == n else solve(
        lambda p: sps.binom.cdf(k, n, p) >= alpha / 2, k / n, 1.0)
    return lower, upper


@pytest.mark.parametrize("k,n", [(0, 10), (1, 10), (5, 10), (10, 10), (59, 60), (3, 97)])
def test_clopper_pearson_matches_tail_inversion(k, n):
    lo, hi = clopper_pearson(k, n)
    want_lo, want_hi = binomial_ci_by_inversion(k, n)
    assert lo == pytest.approx(want_lo, abs=1e-7)
    assert hi == pytest.approx(want_hi, abs=1e-7)
    if 0 < k < n:
        assert lo < k / n < hi


# --- Jonckheere-Terpstra ---


def full_permutation_p(groups, alternative):
    """Oracle: enumerate every permutation of the pooled values."""
    pooled = [v for g in groups for v in g]
    sizes = [len(g) for g in groups]

    def j_doubled(assignment):
        total = 0
        bounds = np.cumsum([0] + sizes)
        for gi in range(len(sizes)):
            for gj in range(gi + 1, len(sizes)):
                for u in assignment[bounds[gi]:bounds[gi + 1]]:
                    for v in assignment[bounds[gj]:bounds[gj + 1]]:
                        total += 2 if u < v else (1 if u == v else 0)
        return total

    observed = j_doubled(pooled)
    hits = total = 0
    for perm in itertools.permutations(pooled):
        total += 1
        score = j_doubled(perm)
        if alternative is TrendAlternative.INCREASING:
            hits += score >= observed
        else:
            hits += score <= observed
    return hits / total


def test_jt_maximal_ordering_exact():
    groups = [[1, 2], [3, 4], [5, 6]]
    report = jonckheere_terpstra(groups, TrendAlternative.INCREASING)
    assert report.method is TrendMethod.EXACT_PERMUTATION
    assert report.jt_statistic == 12.0
    assert report.p_trend == pytest.approx(1.0 / 90.0, abs=1e-12)
    assert report.p_trend == pytest.approx(
        full_permutation_p(groups, TrendAlternative.INCREASING), abs=1e-12)


def test_jt_reversed_ordering():
    report = jonckheere_terpstra([[5, 6], [3, 4], [1, 2]], TrendAlternative.INCREASING)
    assert report.jt_statistic == 0.0
    assert report.p_trend == pytest.approx(1.0, abs=1e-12)


def test_jt_decreasing_alternative():
    report = jonckheere_terpstra([[5, 6], [3, 4], [1, 2]], TrendAlternative.DECREASING)
    assert report.p_trend == pytest.approx(1.0 / 90.0, abs=1e-12)


def test_jt_total_ties_degenerate():
    report = jonckheere_terpstra([[3, 3], [3, 3], [3, 3]])
    assert report.z == 0.0
    assert report.p_trend == 0.5


def test_jt_exact_matches_permutation_oracle_with_ties():
    rng = np.random.default_rng(9)
    for _ in range(5):
        groups = [list(rng.integers(0, 4, 2)) for _ in range(3)]
        for alt in TrendAlternative:
            report = jonckheere_terpstra(groups, alt, TrendMethod.EXACT_PERMUTATION)
            assert report.p_trend == pytest.approx(full_permutation_p(groups, alt), abs=1e-12)


def test_jt_exact_and_normal_agree_on_moderate_samples():
    rng = np.random.default_rng(23)
    for _ in range(8):
        groups = [list(rng.normal(loc, 1.0, 8)) for loc in (0.0, 0.4)]
        exact = jonckheere_terpstra(groups, method=TrendMethod.EXACT_PERMUTATION)
        approx = jonckheere_terpstra(groups, method=TrendMethod.NORMAL_APPROX)
        assert abs(exact.p_trend - approx.p_trend) < 0.02


def test_jt_method_auto_selection():
    small = [[1.0, 2.0], [3.0, 4.0]]
    large = [list(range(10)), list(range(10))]
    assert jonckheere_terpstra(small).method is TrendMethod.EXACT_PERMUTATION
    assert jonckheere_terpstra(large).method is TrendMethod.NORMAL_APPROX


def test_jt_errors():
    with pytest.raises(StatsError) as err:
        jonckheere_terpstra([[1.0, 2.0]])
    assert err.value.code == "TOO_FEW_GROUPS"
    with pytest.raises(StatsError) as err:
        jonckheere_terpstra([[1.0], []])
    assert err.value.code == "EMPTY_GROUP"
