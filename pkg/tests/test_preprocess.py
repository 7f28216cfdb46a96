import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tmpfc.errors import PreprocessError
from tmpfc.ingest import Manifest, MaskSequence, Territory
from tmpfc.preprocess import (
    PreprocessParams,
    clean_frame,
    cleaned_pixel_count,
    default_border_band,
    default_min_component_area,
    extract_opacity_curve,
    remove_small_components,
    strip_border,
)

frames_strategy = hnp.arrays(bool, hnp.array_shapes(min_dims=2, max_dims=2,
                                                    min_side=8, max_side=40))


def make_sequence(frames, fps=15.0):
    frames = np.asarray(frames)
    manifest = Manifest(
        case_id="t", territory=Territory.LAD, fps_raw=fps,
        width=frames.shape[2], height=frames.shape[1],
        frame_paths=tuple(f"f{i}.pgm" for i in range(frames.shape[0])),
    )
    return MaskSequence(manifest=manifest, frames=frames)


def test_strip_border_band_zero_is_identity():
    frame = np.random.default_rng(0).random((10, 10)) > 0.5
    assert np.array_equal(strip_border(frame, 0), frame)


def test_strip_border_keeps_central_block():
    frame = np.ones((10, 10), bool)
    out = strip_border(frame, 2)
    assert out.sum() == 36
    assert out[2:8, 2:8].all()


def test_strip_border_clears_edge_pixel():
    frame = np.zeros((10, 10), bool)
    frame[0, 5] = True
    assert strip_border(frame, 1).sum() == 0


def test_strip_border_rejects_wide_band():
    with pytest.raises(PreprocessError) as err:
        strip_border(np.zeros((10, 10), bool), 5)
    assert err.value.code == "BAND_TOO_WIDE"


def test_remove_small_components_keeps_large():
    frame = np.zeros((100, 100), bool)
    frame[1, 1:4] = True               # 3 px speck
    frame[20:70, 20:70] = True         # large block
    out = remove_small_components(frame, 16)
    assert out.sum() == 2500
    assert not out[1, 1]


def test_remove_small_components_min_area_one_is_identity():
    frame = np.random.default_rng(1).random((20, 20)) > 0.8
    assert np.array_equal(remove_small_components(frame, 1), frame)


def test_diagonal_pixels_are_one_component():
    frame = np.zeros((8, 8), bool)
    frame[3, 3] = frame[4, 4] = True
    out = remove_small_components(frame, 2)
    assert out.sum() == 2  # 8-connectivity joins diagonals


def test_extract_curve_counts():
    # three frames: empty, solid block, medium blob
    frames = np.zeros((3, 64, 64), bool)
    frames[1, 10:60, 10:60] = True
    frames[2, 20:30, 20:40] = True
    seq = make_sequence(frames)
    curve = extract_opacity_curve(seq, PreprocessParams(border_band_px=4,
                                                        min_component_area_px=16))
    assert curve.a == (0, 2500, 200)
    assert curve.fps_raw == 15.0
    assert curve.territory is Territory.LAD


def test_extract_curve_all_empty_is_zero():
    seq = make_sequence(np.zeros((4, 32, 32), bool))
    assert extract_opacity_curve(seq).a == (0, 0, 0, 0)


def test_speck_only_frame_counts_zero():
    frames = np.zeros((1, 64, 64), bool)
    frames[0, 30, 30:33] = True  # 3 px, below the 16 px floor
    seq = make_sequence(frames)
    assert extract_opacity_curve(seq).a == (0,)


def test_cleaning_order_border_then_area():
    # component of 20 px hugging the border: stripping clips it to 4 px,
    # which the area rule then erases entirely
    frame = np.zeros((32, 32), bool)
    frame[2:7, 4:8] = True
    band, min_area = 4, 16
    out = clean_frame(frame, band, min_area)
    assert out.sum() == 0


@given(frames_strategy)
@settings(max_examples=60)
def test_cleaned_count_never_exceeds_raw(frame):
    band = min(2, (min(frame.shape) - 1) // 2)
    assert clean_frame(frame, band, 4).sum() <= frame.sum()


@given(frames_strategy)
@settings(max_examples=60)
def test_cleaning_is_idempotent(frame):
    band = min(2, (min(frame.shape) - 1) // 2)
    once = clean_frame(frame, band, 6)
    twice = clean_frame(once, band, 6)
    assert np.array_equal(once, twice)


@given(frames_strategy)
@settings(max_examples=60)
def test_fast_count_matches_materialized_clean(frame):
    band = min(2, (min(frame.shape) - 1) // 2)
    assert cleaned_pixel_count(frame, band, 6) == int(clean_frame(frame, band, 6).sum())


def test_default_parameter_formulas():
    assert default_border_band(512, 512) == 10
    assert default_border_band(100, 100) == 4    # floor applies
    assert default_min_component_area(512, 512) == 262
    assert default_min_component_area(100, 100) == 16  # floor applies


def test_params_resolve_rejects_wide_band():
    with pytest.raises(PreprocessError) as err:
        PreprocessParams(border_band_px=40).resolve(64, 64)
    assert err.value.code == "BAND_TOO_WIDE"
