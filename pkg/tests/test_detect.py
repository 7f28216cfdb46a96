import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmpfc.detect import (
    DetectionParams,
    SmoothedCurve,
    TerritoryProfile,
    compute_t_f1,
    compute_t_f2,
    detect_f1,
    detect_f2,
    detect_frames,
    find_peak,
    median_filter,
    median_window_size,
    quantile,
)
from tmpfc.errors import CurveError
from tmpfc.ingest import Territory
from tmpfc.preprocess import OpacityCurve
from tmpfc.synth import curve_with_values, oracle_f1_f2

PARAMS = DetectionParams()

counts_strategy = st.lists(st.integers(min_value=0, max_value=100_000),
                           min_size=1, max_size=120)


def smoothed_of(values):
    curve = curve_with_values([0] * len(values))
    return SmoothedCurve(raw=curve, window=1, smoothed=np.asarray(values, float))


# --- median window sizing ---


@pytest.mark.parametrize("length,expected", [
    (100, 5),   # 4.0 rounds to 4, forced odd
    (30, 3),    # 1.2 rounds to 1, clamped up
    (500, 11),  # 20 clamped to the max
    (21, 3),
    (275, 11),
])
def test_median_window_size(length, expected):
    assert median_window_size(length, PARAMS) == expected


# --- median filter ---


def test_median_filter_window_one_is_identity(fixture_curve):
    sc = median_filter(fixture_curve, 1)
    assert np.array_equal(sc.smoothed, np.asarray(fixture_curve.a, float))


def test_median_filter_known_values():
    sc = median_filter(curve_with_values([0, 0, 100, 800, 950]), 3)
    assert sc.smoothed.tolist() == [0, 0, 100, 800, 950]


def test_median_filter_suppresses_spike():
    sc = median_filter(curve_with_values([5, 1000, 5]), 3)
    assert sc.smoothed.tolist() == [5, 5, 5]


@given(counts_strategy, st.sampled_from([1, 3, 5, 7, 9, 11]))
@settings(max_examples=80)
def test_median_filter_matches_per_window_sort(values, window):
    sc = median_filter(curve_with_values(values), window)
    n = len(values)
    half = window // 2
    for t in range(n):
        window_vals = sorted(
            values[min(max(j, 0), n - 1)] for j in range(t - half, t + half + 1)
        )
        assert sc.smoothed[t] == window_vals[len(window_vals) // 2]


@given(counts_strategy, st.sampled_from([3, 5, 11]))
@settings(max_examples=60)
def test_median_filter_stays_within_raw_range(values, window):
    sc = median_filter(curve_with_values(values), window)
    assert sc.smoothed.min() >= min(values)
    assert sc.smoothed.max() <= max(values)


# --- quantile ---


def test_quantile_interpolates():
    assert quantile([0, 0, 100, 800, 950], 0.3) == pytest.approx(20.0, abs=1e-9)


def test_quantile_boundaries():
    values = [9, 1, 5, 3]
    assert quantile(values, 0.0) == 1.0
    assert quantile(values, 1.0) == 9.0


def test_quantile_flat_segment():
    assert quantile([3, 4, 4, 5, 6], 0.3) == 4.0


def test_quantile_empty_rejected():
    with pytest.raises(CurveError) as err:
        quantile([], 0.5)
    assert err.value.code == "EMPTY_INPUT"


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=50),
       st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=100)
def test_quantile_matches_numpy(values, q):
    assert quantile(values, q) == pytest.approx(float(np.quantile(values, q)), abs=1e-9)


# --- peak ---


def test_find_peak_earliest_tie():
    assert find_peak(curve_with_values([0, 5, 9, 9, 3])) == (2, 9)


def test_find_peak_constant():
    assert find_peak(curve_with_values([7, 7, 7])) == (0, 7)


def test_find_peak_fixture(fixture_curve):
    assert find_peak(fixture_curve) == (5, 1000)


# --- thresholds ---


def test_compute_t_f1_fixture(fixture_curve):
    sc = median_filter(fixture_curve, 3)
    t_f1, w_max = compute_t_f1(sc, 5, 1000, PARAMS)
    assert w_max == (0, 10)
    assert t_f1 == 900.0


def test_compute_t_f1_constant_curve():
    sc = smoothed_of([1000.0] * 20)
    t_f1, _ = compute_t_f1(sc, 10, 1000, PARAMS)
    assert t_f1 == 1000.0  # quantile term dominates the 900 floor


def test_compute_t_f1_clips_at_start():
    sc = smoothed_of([10.0] * 20)
    _, w_max = compute_t_f1(sc, 0, 10, PARAMS)
    assert w_max[0] == 0


def test_compute_t_f2_fixture(fixture_curve):
    sc = median_filter(fixture_curve, 3)
    t1, t2, t_f2 = compute_t_f2(sc, 1000, PARAMS)
    assert t1 == pytest.approx(26.4)
    assert t2 == 4.0
    assert t_f2 == 4.0


def test_compute_t_f2_short_sequence_uses_whole():
    sc = smoothed_of([5.0, 100.0, 2.0])
    t1, t2, _ = compute_t_f2(sc, 100, PARAMS)
    assert t1 == quantile([5, 100, 2], 0.3)
    assert t2 == t1


def test_compute_t_f2_zero_head():
    sc = smoothed_of([0.0] * 6 + [1000.0] * 6 + [500.0] * 6)
    _, _, t_f2 = compute_t_f2(sc, 1000, PARAMS)
    assert t_f2 == 0.0


# --- f1 scan ---


def test_detect_f1_fixture(fixture_curve):
    sc = median_filter(fixture_curve, 3)
    f1, confirmed = detect_f1(sc, 900.0, 5, PARAMS)
    assert (f1, confirmed) == (4, True)


def test_detect_f1_step_curve():
    f1, confirmed = detect_f1(smoothed_of([0, 1000, 1000]), 900.0, 1, PARAMS)
    assert (f1, confirmed) == (1, True)


def test_detect_f1_run_of_length_one():
    # everything below threshold except the peak itself
    f1, confirmed = detect_f1(smoothed_of([10, 20, 950, 20, 10]), 900.0, 2, PARAMS)
    assert (f1, confirmed) == (2, True)


def test_detect_f1_skips_unconfirmed_candidate():
    # candidate 2 fails the slope check (dip right after), candidate 3 passes
    smoothed = smoothed_of([0, 0, 950, 940, 960, 1000, 990])
    f1, confirmed = detect_f1(smoothed, 900.0, 5, PARAMS)
    assert (f1, confirmed) == (3, True)


# --- f2 scan ---


def test_detect_f2_fixture(fixture_curve):
    sc = median_filter(fixture_curve, 3)
    f2, count = detect_f2(sc, 4.0, 5, PARAMS)
    assert (f2, count) == (18, 2)


def test_detect_f2_never_clears():
    f2, count = detect_f2(smoothed_of([500, 1000, 900, 800, 700]), 90.0, 1, PARAMS)
    assert (f2, count) == (None, 0)


def test_detect_f2_skips_transient_dip():
    smoothed = smoothed_of([100, 50, 9, 20, 30, 8, 7, 6, 5, 4, 4, 3])
    f2, count = detect_f2(smoothed, 10.0, 0, PARAMS)
    assert (f2, count) == (5, 3)


def test_detect_f2_transient_dip_full_pipeline():
    # raw 12-frame curve whose smoothed shape dips, rebounds, then clears
    raw = [50, 50, 1000, 1000, 5, 5, 300, 300, 5, 5, 5, 5]
    det = detect_frames(curve_with_values(raw))
    assert det.window == 3
    assert det.t_f2 == 5.0
    assert det.f2 == 8
    oracle = oracle_f1_f2(raw)
    assert oracle.f2 == 8


# --- full chain ---


def test_detect_frames_fixture_trace(fixture_curve):
    det = detect_frames(fixture_curve)
    assert det.window == 3
    assert (det.f_max, det.a_max) == (5, 1000)
    assert det.w_max == (0, 10)
    assert det.t_f1 == 900.0
    assert (det.f1, det.f1_confirmed) == (4, True)
    assert det.t1 == pytest.approx(26.4)
    assert (det.t2, det.t_f2) == (4.0, 4.0)
    assert (det.f2, det.f2_confirm_count) == (18, 2)


def test_detect_frames_constant_curve():
    det = detect_frames(curve_with_values([900] * 30))
    assert det.f1 == 0
    assert det.f2 is None


def test_detect_frames_monotone_rise_has_no_clearance():
    det = detect_frames(curve_with_values(range(100, 1600, 50)))
    assert det.f2 is None


def test_detect_frames_empty_curve_rejected():
    with pytest.raises(CurveError):
        detect_frames(OpacityCurve(case_id="e", territory=Territory.LAD,
                                   fps_raw=15.0, a=()))


def test_profile_requires_all_territories():
    with pytest.raises(ValueError):
        TerritoryProfile(params={Territory.LAD: DetectionParams()})


def test_params_validation():
    with pytest.raises(ValueError):
        DetectionParams(delta1=0.1, delta2=0.9)
    with pytest.raises(ValueError):
        DetectionParams(median_min=4)
    with pytest.raises(ValueError):
        DetectionParams(q_fill=1.0)


# --- structural properties ---


@given(counts_strategy)
@settings(max_examples=150)
def test_frame_ordering_invariant(values):
    det = detect_frames(curve_with_values(values))
    if det.f1 is not None:
        assert 0 <= det.f1 <= det.f_max
    if det.f2 is not None:
        assert det.f_max < det.f2 < len(values)
    assert det.t_f1 >= PARAMS.delta1 * det.a_max
    assert det.t_f2 <= PARAMS.delta2 * det.a_max


@given(counts_strategy, st.sampled_from([2, 10, 100]))
@settings(max_examples=100)
def test_scale_covariance(values, factor):
    base = detect_frames(curve_with_values(values))
    scaled = detect_frames(curve_with_values([v * factor for v in values]))
    assert (base.f_max, base.f1, base.f2) == (scaled.f_max, scaled.f1, scaled.f2)


@given(st.integers(min_value=1, max_value=30))
@settings(max_examples=30)
def test_time_shift_covariance(shift):
    # baseline long enough that the head window stays inside it, and a
    # length range over which the median window size stays constant
    baseline = [40] * 10
    body = [40, 300, 900, 1000, 1000, 990, 600, 250, 120, 70, 50, 45, 42,
            41, 40, 40, 40, 40, 40, 40]
    base_values = baseline + body + [40] * 60
    padded = [40] * shift + base_values
    base = detect_frames(curve_with_values(base_values))
    moved = detect_frames(curve_with_values(padded))
    window_stable = median_window_size(len(base_values), PARAMS) == \
        median_window_size(len(padded), PARAMS)
    if window_stable:
        assert moved.f_max == base.f_max + shift
        if base.f1 is not None:
            assert moved.f1 == base.f1 + shift
        if base.f2 is not None:
            assert moved.f2 == base.f2 + shift
