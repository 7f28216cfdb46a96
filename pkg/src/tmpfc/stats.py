"""Validation statistics: agreement, correlation, diagnostics, ordered trend.

Each routine is a direct implementation of the textbook definition so that
results are reproducible from counts alone; scipy supplies distribution
functions (Student t, beta, normal) but no estimator does the work for us.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats as _sps

from .errors import StatsError
from .ingest import GroupLabel
from .quantify import Band

LOA_MULTIPLIER = 1.96  # conventional 95% limits of agreement

#: Total sample size at or below which the trend test enumerates the exact
#: permutation null instead of using the normal approximation.
EXACT_TREND_CUTOVER = 12


@dataclass(frozen=True)
class StudyRecord:
    """One case in a validation table; absent measurements stay None."""

    case_id: str
    tmpfc_auto: float | None = None
    tmpfc_manual: float | None = None
    cmvd_label: bool | None = None
    group_label: GroupLabel | None = None
    ea_ratio: float | None = None
    ea_prime_ratio: float | None = None
    band: Band | None = None


@dataclass(frozen=True)
class PearsonResult:
    r: float
    p: float
    ci_low: float
    ci_high: float
    n: int


@dataclass(frozen=True)
class AgreementReport:
    n: int
    bias: float
    sd_diff: float
    loa_low: float
    loa_high: float
    prop_bias_slope: float
    prop_bias_p: float
    pearson_r: float
    pearson_p: float
    r_ci_low: float
    r_ci_high: float


@dataclass(frozen=True)
class RocReport:
    points: tuple[tuple[float, float, float], ...]  # (threshold, sens, spec)
    auc: float
    youden_threshold: float
    youden_value: float


@dataclass(frozen=True)
class MetricCI:
    value: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class DiagnosticReport:
    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: MetricCI | None
    specificity: MetricCI | None
    ppv: MetricCI | None
    npv: MetricCI | None


class TrendAlternative(str, Enum):
    INCREASING = "INCREASING"
    DECREASING = "DECREASING"


class TrendMethod(str, Enum):
    EXACT_PERMUTATION = "EXACT_PERMUTATION"
    NORMAL_APPROX = "NORMAL_APPROX"


@dataclass(frozen=True)
class TrendReport:
    group_sizes: tuple[int, ...]
    jt_statistic: float
    z: float
    p_trend: float
    method: TrendMethod


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def pearson(x, y) -> PearsonResult:
    """Product-moment correlation with t-test p-value and Fisher-z CI.

    Raises:
        StatsError: TOO_FEW (n < 3) or ZERO_VARIANCE.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise StatsError("LENGTH_MISMATCH", f"{x.size} vs {y.size} samples")
    n = x.size
    if n < 3:
        raise StatsError("TOO_FEW", f"need at least 3 pairs, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise StatsError("ZERO_VARIANCE", "correlation undefined for a constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))

    if abs(r) == 1.0:
        p = 0.0
        ci_low = ci_high = r
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = 2.0 * float(_sps.t.sf(abs(t), n - 2))
        if n <= 3:
            ci_low, ci_high = -1.0, 1.0
        else:
            zr = math.atanh(r)
            se = 1.0 / math.sqrt(n - 3)
            ci_low = math.tanh(zr - LOA_MULTIPLIER * se)
            ci_high = math.tanh(zr + LOA_MULTIPLIER * se)
    return PearsonResult(r=r, p=p, ci_low=ci_low, ci_high=ci_high, n=n)


def _ols_slope_test(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope of y on x with a two-sided t-test against zero."""
    n = x.size
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        return 0.0, 1.0
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = y.mean() - slope * x.mean()
    resid = y - (intercept + slope * x)
    sse = float(resid @ resid)
    if n <= 2:
        return slope, 1.0
    se = math.sqrt(sse / (n - 2) / sxx)
    if se == 0.0:
        return slope, (1.0 if slope == 0.0 else 0.0)
    t = slope / se
    return slope, 2.0 * float(_sps.t.sf(abs(t), n - 2))


def bland_altman(a, b) -> AgreementReport:
    """Agreement between two paired measurements.

    Differences are taken a - b, so with the automated reading first a
    negative bias means it reads lower than the comparator. The limits of
    agreement use the n-1 sample standard deviation and the 1.96 multiplier;
    proportional bias is the regression of differences on pair means.

    Raises:
        StatsError: LENGTH_MISMATCH or TOO_FEW (n < 3).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != b.size:
        raise StatsError("LENGTH_MISMATCH", f"{a.size} vs {b.size} samples")
    n = a.size
    if n < 3:
        raise StatsError("TOO_FEW", f"need at least 3 pairs, got {n}")
    d = a - b
    bias = float(d.mean())
    sd_diff = float(d.std(ddof=1))
    mean_pair = (a + b) / 2.0
    slope, slope_p = _ols_slope_test(mean_pair, d)
    pr = pearson(a, b)
    return AgreementReport(
        n=n,
        bias=bias,
        sd_diff=sd_diff,
        loa_low=bias - LOA_MULTIPLIER * sd_diff,
        loa_high=bias + LOA_MULTIPLIER * sd_diff,
        prop_bias_slope=slope,
        prop_bias_p=slope_p,
        pearson_r=pr.r,
        pearson_p=pr.p,
        r_ci_low=pr.ci_low,
        r_ci_high=pr.ci_high,
    )


def _youden_from_points(points) -> tuple[float, float]:
    best_thr = points[0][0]
    best_j = -math.inf
    for thr, sens, spec in points:  # descending thresholds; >= keeps the lowest
        j = sens + spec - 1.0
        if j >= best_j:
            best_j = j
            best_thr = thr
    return best_thr, best_j


def roc_auc(scores, labels) -> RocReport:
    """ROC over every distinct score threshold (score >= threshold is positive).

    The AUC is the trapezoidal integral over (1 - specificity, sensitivity),
    which equals the pairwise concordance probability with ties counted as
    one half. The reported operating point maximizes sensitivity +
    specificity - 1, breaking ties toward the lowest threshold.

    Raises:
        StatsError: SINGLE_CLASS when labels are all positive or all negative.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.size != labels.size:
        raise StatsError("LENGTH_MISMATCH", f"{scores.size} vs {labels.size}")
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise StatsError("SINGLE_CLASS", "need at least one positive and one negative")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    cum_tp = np.cumsum(sorted_labels)
    cum_fp = np.cumsum(~sorted_labels)
    # last position of each distinct score = the threshold's confusion counts
    is_last = np.r_[sorted_scores[1:] != sorted_scores[:-1], True]
    thresholds = sorted_scores[is_last]
    tp = cum_tp[is_last]
    fp = cum_fp[is_last]
    sens = tp / n_pos
    spec = (n_neg - fp) / n_neg

    points = tuple(
        (float(t), float(se), float(sp)) for t, se, sp in zip(thresholds, sens, spec)
    )
    fpr = np.r_[0.0, 1.0 - spec]
    tpr = np.r_[0.0, sens]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    thr, j = _youden_from_points(points)
    return RocReport(points=points, auc=auc, youden_threshold=thr, youden_value=j)


def youden_threshold(roc: RocReport) -> tuple[float, float]:
    """Operating threshold maximizing sensitivity + specificity - 1."""
    return _youden_from_points(roc.points)


def clopper_pearson(k: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact binomial confidence interval for k successes in n trials."""
    if not 0 <= k <= n or n <= 0:
        raise StatsError("EMPTY_DENOMINATOR", f"k={k}, n={n}")
    lo = 0.0 if k == 0 else float(_sps.beta.ppf(alpha / 2.0, k, n - k + 1))
    hi = 1.0 if k == n else float(_sps.beta.ppf(1.0 - alpha / 2.0, k + 1, n - k))
    return lo, hi


def diagnostic_metrics(predicted, actual) -> DiagnosticReport:
    """Confusion-matrix metrics with exact binomial confidence intervals.

    A metric whose denominator is zero is reported as None rather than
    fabricated.
    """
    predicted = np.asarray(predicted, dtype=bool)
    actual = np.asarray(actual, dtype=bool)
    if predicted.size != actual.size:
        raise StatsError("LENGTH_MISMATCH", f"{predicted.size} vs {actual.size}")
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    tn = int(np.sum(~predicted & ~actual))
    fn = int(np.sum(~predicted & actual))

    def estimate(k: int, denom: int) -> MetricCI | None:
        if denom == 0:
            return None
        lo, hi = clopper_pearson(k, denom)
        return MetricCI(value=k / denom, ci_low=lo, ci_high=hi)

    return DiagnosticReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        sensitivity=estimate(tp, tp + fn),
        specificity=estimate(tn, tn + fp),
        ppv=estimate(tp, tp + fp),
        npv=estimate(tn, tn + fn),
    )


def _doubled_pair_score(u: float, v: float) -> int:
    """2 if u < v, 1 on a tie, 0 otherwise (doubled to stay integral)."""
    if u < v:
        return 2
    if u == v:
        return 1
    return 0


def _exact_doubled_j_distribution(pooled: list[float], sizes: list[int]) -> dict[int, int]:
    """Distribution of the doubled trend statistic over all group assignments.

    Enumerates every way to partition the pooled values into groups of the
    given sizes, memoized on the remaining index set: the distribution of
    cross-group contributions only depends on which values remain.
    """
    n = len(pooled)
    pair2 = [[_doubled_pair_score(pooled[u], pooled[v]) for v in range(n)] for u in range(n)]
    row_total = [sum(row) for row in pair2]
    consumed_to_level = {}
    consumed = 0
    for level, size in enumerate(sizes):
        consumed_to_level[consumed] = level
        consumed += size

    memo: dict[frozenset, dict[int, int]] = {}

    def rec(remaining: frozenset) -> dict[int, int]:
        level = consumed_to_level[n - len(remaining)]
        if level == len(sizes) - 1:
            return {0: 1}
        cached = memo.get(remaining)
        if cached is not None:
            return cached
        dist: dict[int, int] = {}
        rem_row = {u: sum(pair2[u][v] for v in remaining) for u in remaining}
        for combo in itertools.combinations(sorted(remaining), sizes[level]):
            # contribution of this group against everything assigned later
            contrib = sum(rem_row[u] for u in combo)
            contrib -= sum(pair2[u][v] for u in combo for v in combo)
            sub = rec(remaining - frozenset(combo))
            for j2, count in sub.items():
                key = j2 + contrib
                dist[key] = dist.get(key, 0) + count
        memo[remaining] = dist
        return dist

    return rec(frozenset(range(n)))


def jonckheere_terpstra(
    groups,
    alternative: TrendAlternative = TrendAlternative.INCREASING,
    method: TrendMethod | None = None,
) -> TrendReport:
    """Nonparametric test for a monotone trend across ordered groups.

    The statistic sums, over every ordered pair of groups, the number of
    cross-group value pairs in increasing order, counting ties as one half.
    With `method=None` the exact permutation null is enumerated when the
    total sample size is at most EXACT_TREND_CUTOVER, otherwise the normal
    approximation with tie-corrected variance and a half-unit continuity
    correction is used (the correction keeps the two methods within a
    couple of percent of each other at moderate sizes). When every pooled
    value is identical the statistic is degenerate and p = 0.5 is reported
    by continuity.

    Raises:
        StatsError: TOO_FEW_GROUPS or EMPTY_GROUP.
    """
    groups = [list(map(float, g)) for g in groups]
    if len(groups) < 2:
        raise StatsError("TOO_FEW_GROUPS", f"need >= 2 groups, got {len(groups)}")
    for i, g in enumerate(groups):
        if not g:
            raise StatsError("EMPTY_GROUP", f"group {i} is empty")
    sizes = [len(g) for g in groups]
    n = sum(sizes)
    pooled = [v for g in groups for v in g]

    j2 = 0
    for gi, gj in itertools.combinations(range(len(groups)), 2):
        for u in groups[gi]:
            for v in groups[gj]:
                j2 += _doubled_pair_score(u, v)
    j_stat = j2 / 2.0

    mean_j = (n * n - sum(s * s for s in sizes)) / 4.0
    ties = {}
    for v in pooled:
        ties[v] = ties.get(v, 0) + 1
    tie_sizes = list(ties.values())
    s2 = sum(s * s for s in sizes)
    s3 = sum(s**3 for s in sizes)
    t2 = sum(t * t for t in tie_sizes)
    t3 = sum(t**3 for t in tie_sizes)
    # tie-corrected variance (Hollander & Wolfe form)
    var = (
        (n * (n - 1) * (2 * n + 5) - sum(s * (s - 1) * (2 * s + 5) for s in sizes)
         - sum(t * (t - 1) * (2 * t + 5) for t in tie_sizes)) / 72.0
        + (s3 - 3 * s2 + 2 * n) * (t3 - 3 * t2 + 2 * n) / (36.0 * n * (n - 1) * (n - 2))
        + (s2 - n) * (t2 - n) / (8.0 * n * (n - 1))
    )
    if var <= 0.0:
        return TrendReport(
            group_sizes=tuple(sizes), jt_statistic=j_stat, z=0.0, p_trend=0.5,
            method=TrendMethod.NORMAL_APPROX,
        )
    z = (j_stat - mean_j) / math.sqrt(var)

    if method is None:
        method = (
            TrendMethod.EXACT_PERMUTATION if n <= EXACT_TREND_CUTOVER
            else TrendMethod.NORMAL_APPROX
        )

    if method is TrendMethod.EXACT_PERMUTATION:
        dist = _exact_doubled_j_distribution(pooled, sizes)
        total = sum(dist.values())
        if alternative is TrendAlternative.INCREASING:
            hits = sum(c for v, c in dist.items() if v >= j2)
        else:
            hits = sum(c for v, c in dist.items() if v <= j2)
        p = hits / total
    else:
        sd = math.sqrt(var)
        if alternative is TrendAlternative.INCREASING:
            p = 1.0 - _normal_cdf((j_stat - mean_j - 0.5) / sd)
        else:
            p = _normal_cdf((j_stat - mean_j + 0.5) / sd)

    return TrendReport(
        group_sizes=tuple(sizes), jt_statistic=j_stat, z=z, p_trend=p, method=method
    )
