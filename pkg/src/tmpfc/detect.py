"""Transit-frame detection on an opacity curve.

The opacity curve is the per-frame vessel pixel count A_t. Detection
finds the peak-opacification frame on the raw counts, then works on a
median-smoothed copy to locate:

  f1, the initial filling frame: scanning backward from the peak, the
      earliest frame of the contiguous run staying at or above an
      adaptive filling threshold, confirmed by a sustained non-negative
      slope over the following frames;
  f2, the first clearance frame: scanning forward from the peak, the
      first frame at or below an adaptive clearance threshold, confirmed
      by the following frames staying at or below it.

Both thresholds are relative to the peak count and to order statistics
of the smoothed curve, so detection is invariant to rescaling the counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import CurveError
from .ingest import Territory
from .preprocess import OpacityCurve


@dataclass(frozen=True)
class DetectionParams:
    """Tuning knobs for frame detection.

    n1 is the near-peak window width used for the filling quantile, n2 the
    width of the head/tail windows used for the clearance quantile, q_fill
    the quantile level for both. delta1 and delta2 set threshold floors as
    fractions of the peak count. The median window is a fraction of the
    sequence length, forced odd and clamped to [median_min, median_max].
    """

    n1: int = 12
    q_fill: float = 0.3
    n2: int = 5
    delta1: float = 0.9
    delta2: float = 0.1
    median_frac: float = 0.04
    median_min: int = 3
    median_max: int = 11
    f1_confirm_frames: int = 2
    f2_confirm_frames: int = 3

    def __post_init__(self):
        if not (self.n1 >= 1 and self.n2 >= 1):
            raise ValueError("window widths n1, n2 must be >= 1")
        if not 0.0 < self.q_fill < 1.0:
            raise ValueError(f"q_fill must lie in (0, 1), got {self.q_fill}")
        if not 0.0 < self.delta2 < self.delta1 <= 1.0:
            raise ValueError("need 0 < delta2 < delta1 <= 1")
        if self.median_min % 2 == 0 or self.median_max % 2 == 0:
            raise ValueError("median window bounds must be odd")
        if self.median_min > self.median_max:
            raise ValueError("median_min must not exceed median_max")
        if self.f1_confirm_frames < 1 or self.f2_confirm_frames < 1:
            raise ValueError("confirmation spans must be >= 1")


@dataclass(frozen=True)
class TerritoryProfile:
    """Per-territory detection parameters; all three territories present."""

    params: Mapping[Territory, DetectionParams] = field(
        default_factory=lambda: {t: DetectionParams() for t in Territory}
    )

    def __post_init__(self):
        missing = [t for t in Territory if t not in self.params]
        if missing:
            raise ValueError(f"profile lacks territories: {missing}")

    def for_territory(self, territory: Territory) -> DetectionParams:
        return self.params[territory]


@dataclass
class SmoothedCurve:
    raw: OpacityCurve
    window: int
    smoothed: np.ndarray  # float, same length as raw.a


@dataclass(frozen=True)
class FrameDetection:
    """Detection output with every intermediate kept for auditability."""

    window: int
    f_max: int
    a_max: int
    w_max: tuple[int, int]  # inclusive near-peak window bounds
    t_f1: float
    t1: float
    t2: float
    t_f2: float
    f1: int | None
    f2: int | None
    f1_confirmed: bool
    f2_confirm_count: int


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def median_window_size(length: int, params: DetectionParams) -> int:
    """Median window: median_frac of the length, odd, clamped to the bounds."""
    if length < 1:
        raise CurveError("EMPTY_INPUT", "curve has no frames")
    w = _round_half_up(params.median_frac * length)
    if w % 2 == 0:
        w += 1
    return min(max(w, params.median_min), params.median_max)


def median_filter(curve: OpacityCurve, window: int) -> SmoothedCurve:
    """Centered running median with edge replication.

    Out-of-range window positions clamp to the first/last sample, which
    avoids fabricating local maxima at the ends of monotone segments.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and positive, got {window}")
    a = np.asarray(curve.a, dtype=float)
    if window == 1:
        return SmoothedCurve(raw=curve, window=1, smoothed=a)
    half = window // 2
    padded = np.concatenate([np.repeat(a[0], half), a, np.repeat(a[-1], half)])
    windows = np.lib.stride_tricks.sliding_window_view(padded, window)
    return SmoothedCurve(raw=curve, window=window, smoothed=np.median(windows, axis=1))


def quantile(values, q: float) -> float:
    """Linear-interpolation quantile over the order statistics.

    With sorted v[0..n-1] and h = (n-1)q, returns
    v[floor(h)] + (h - floor(h)) * (v[floor(h)+1] - v[floor(h)]).
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise CurveError("EMPTY_INPUT", "quantile of an empty window")
    h = (v.size - 1) * q
    lo = math.floor(h)
    if lo >= v.size - 1:
        return float(v[-1])
    frac = h - lo
    return float(v[lo] + frac * (v[lo + 1] - v[lo]))


def find_peak(curve: OpacityCurve) -> tuple[int, int]:
    """Frame index and value of the raw-count maximum; earliest frame on ties."""
    if len(curve) == 0:
        raise CurveError("EMPTY_INPUT", "curve has no frames")
    a = np.asarray(curve.a)
    f_max = int(np.argmax(a))
    return f_max, int(a[f_max])


def compute_t_f1(
    sc: SmoothedCurve, f_max: int, a_max: int, params: DetectionParams
) -> tuple[float, tuple[int, int]]:
    """Filling threshold: near-peak quantile, floored at delta1 * a_max."""
    n = sc.smoothed.size
    lo = max(0, f_max - params.n1 // 2)
    hi = min(n - 1, f_max + (params.n1 + 1) // 2 - 1)
    q = quantile(sc.smoothed[lo : hi + 1], params.q_fill)
    return max(q, params.delta1 * a_max), (lo, hi)


def detect_f1(
    sc: SmoothedCurve, t_f1: float, f_max: int, params: DetectionParams
) -> tuple[int | None, bool]:
    """Earliest frame of the above-threshold run ending at the peak.

    A candidate is confirmed when the smoothed curve is non-decreasing over
    the next f1_confirm_frames steps (indices clipped at the peak, so the
    peak itself always confirms). On failure the candidate advances one
    frame toward the peak.
    """
    s = sc.smoothed
    start = f_max
    while start > 0 and s[start - 1] >= t_f1:
        start -= 1
    for cand in range(start, f_max + 1):
        ok = True
        for k in range(1, params.f1_confirm_frames + 1):
            i_prev = min(cand + k - 1, f_max)
            i_next = min(cand + k, f_max)
            if s[i_next] < s[i_prev]:
                ok = False
                break
        if ok:
            return cand, True
    return None, False


def compute_t_f2(
    sc: SmoothedCurve, a_max: int, params: DetectionParams
) -> tuple[float, float, float]:
    """Clearance threshold: min of head quantile, tail quantile, delta2 * a_max."""
    s = sc.smoothed
    k = min(params.n2, s.size)
    t1 = quantile(s[:k], params.q_fill)
    t2 = quantile(s[-k:], params.q_fill)
    return t1, t2, min(t1, t2, params.delta2 * a_max)


def detect_f2(
    sc: SmoothedCurve, t_f2: float, f_max: int, params: DetectionParams
) -> tuple[int | None, int]:
    """First post-peak frame at or below the clearance threshold.

    Confirmation requires the next f2_confirm_frames frames (or as many as
    remain) to stay at or below the threshold; the count actually checked
    is returned so short-tail detections can be flagged downstream. When a
    checked frame rebounds above the threshold, scanning resumes past it.
    """
    s = sc.smoothed
    n = s.size
    t = f_max + 1
    while t < n:
        if s[t] <= t_f2:
            span = min(params.f2_confirm_frames, n - 1 - t)
            rebound = None
            for k in range(1, span + 1):
                if s[t + k] > t_f2:
                    rebound = t + k
                    break
            if rebound is None:
                return t, span
            t = rebound + 1
        else:
            t += 1
    return None, 0


def detect_frames(curve: OpacityCurve, profile: TerritoryProfile | None = None) -> FrameDetection:
    """Run the full detection chain on one opacity curve.

    The peak is located on the raw counts; all thresholds and scans use the
    median-smoothed curve. Absent f1/f2 are returned as None and left to
    quality control to adjudicate.
    """
    if len(curve) == 0:
        raise CurveError("EMPTY_INPUT", "curve has no frames")
    if profile is None:
        profile = TerritoryProfile()
    params = profile.for_territory(curve.territory)

    window = median_window_size(len(curve), params)
    sc = median_filter(curve, window)
    f_max, a_max = find_peak(curve)
    t_f1, w_max = compute_t_f1(sc, f_max, a_max, params)
    f1, f1_confirmed = detect_f1(sc, t_f1, f_max, params)
    t1, t2, t_f2 = compute_t_f2(sc, a_max, params)
    f2, f2_confirm_count = detect_f2(sc, t_f2, f_max, params)

    return FrameDetection(
        window=window,
        f_max=f_max,
        a_max=a_max,
        w_max=w_max,
        t_f1=t_f1,
        t1=t1,
        t2=t2,
        t_f2=t_f2,
        f1=f1,
        f2=f2,
        f1_confirmed=f1_confirmed,
        f2_confirm_count=f2_confirm_count,
    )
