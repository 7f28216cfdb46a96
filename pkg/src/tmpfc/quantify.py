"""Frame counts, quality control, classification, and severity banding."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .detect import FrameDetection
from .errors import CurveError
from .ingest import Territory
from .preprocess import OpacityCurve

REFERENCE_FPS = 30.0

DEFAULT_MIN_PEAK = 800  # pixel count below which opacification is unusable
DEFAULT_MIN_TMPFC = 10  # raw transits shorter than this are implausible
DEFAULT_CMVD_THRESHOLD = 87.0  # normalized frames, inclusive
DEFAULT_BAND_BOUNDS = (87.0, 114.0, 124.0)


class QcVerdict(str, Enum):
    PASS = "PASS"
    EXCLUDE_LOW_PEAK = "EXCLUDE_LOW_PEAK"
    EXCLUDE_FRAME_ORDER = "EXCLUDE_FRAME_ORDER"
    EXCLUDE_MISSING_FRAME = "EXCLUDE_MISSING_FRAME"
    EXCLUDE_SHORT_TMPFC = "EXCLUDE_SHORT_TMPFC"


class Band(str, Enum):
    BELOW_THRESHOLD = "BELOW_THRESHOLD"
    LOW = "LOW"
    INTERMEDIATE = "INTERMEDIATE"
    HIGH = "HIGH"


@dataclass(frozen=True)
class QcStatus:
    verdict: QcVerdict
    low_confidence: bool
    detail: str


@dataclass(frozen=True)
class SeverityBand:
    value: Band
    bounds_used: tuple[float, float, float]


@dataclass(frozen=True)
class TmpfcResult:
    """Per-case outcome; the count fields are present exactly when QC passes."""

    case_id: str
    territory: Territory
    fps_raw: float
    qc: QcStatus
    tmpfc_raw: int | None = None
    tmpfc_normalized: float | None = None
    cmvd_positive: bool | None = None
    band: SeverityBand | None = None


def compute_tmpfc(det: FrameDetection) -> int | None:
    """f2 - f1 when both frames exist in valid order, else None."""
    if det.f1 is None or det.f2 is None or det.f1 >= det.f2:
        return None
    return det.f2 - det.f1


def normalize_tmpfc(raw: int, fps_raw: float) -> float:
    """Rescale a raw frame count to the 30 fps reference rate.

    Multiplies before dividing so that the identity at 30 fps is exact.
    """
    if fps_raw <= 0:
        raise CurveError("BAD_FPS", f"fps_raw must be > 0, got {fps_raw}")
    return raw * REFERENCE_FPS / fps_raw


def apply_qc(
    det: FrameDetection,
    raw: int | None,
    min_peak: int = DEFAULT_MIN_PEAK,
    min_tmpfc: int = DEFAULT_MIN_TMPFC,
    f2_confirm_frames: int = 3,
) -> QcStatus:
    """Map a detection to exactly one verdict.

    Checks run in priority order: unusable peak, missing frame, invalid
    frame order, then implausibly short count. A detection whose clearance
    confirmation was cut short by the end of the sequence is accepted but
    flagged low_confidence.
    """
    low_confidence = det.f2 is not None and det.f2_confirm_count < f2_confirm_frames
    if det.a_max < min_peak:
        return QcStatus(
            QcVerdict.EXCLUDE_LOW_PEAK,
            low_confidence,
            f"peak count {det.a_max} < {min_peak}",
        )
    if det.f1 is None or det.f2 is None:
        missing = "f1" if det.f1 is None else "f2"
        return QcStatus(
            QcVerdict.EXCLUDE_MISSING_FRAME, low_confidence, f"{missing} not detected"
        )
    if det.f1 >= det.f2:
        return QcStatus(
            QcVerdict.EXCLUDE_FRAME_ORDER,
            low_confidence,
            f"f1={det.f1} not before f2={det.f2}",
        )
    if raw is None or raw < min_tmpfc:
        return QcStatus(
            QcVerdict.EXCLUDE_SHORT_TMPFC,
            low_confidence,
            f"raw count {raw} < {min_tmpfc}",
        )
    return QcStatus(QcVerdict.PASS, low_confidence, "")


def classify_cmvd(normalized: float, threshold: float = DEFAULT_CMVD_THRESHOLD) -> bool:
    """Positive at or above the normalized-count threshold."""
    return normalized >= threshold


def stratify(
    normalized: float, bounds: tuple[float, float, float] = DEFAULT_BAND_BOUNDS
) -> SeverityBand:
    """Assign the severity band; the three cut points partition [0, inf)."""
    b0, b1, b2 = bounds
    if normalized < b0:
        value = Band.BELOW_THRESHOLD
    elif normalized < b1:
        value = Band.LOW
    elif normalized < b2:
        value = Band.INTERMEDIATE
    else:
        value = Band.HIGH
    return SeverityBand(value=value, bounds_used=bounds)


def quantify_detection(
    curve: OpacityCurve,
    det: FrameDetection,
    min_peak: int = DEFAULT_MIN_PEAK,
    min_tmpfc: int = DEFAULT_MIN_TMPFC,
    f2_confirm_frames: int = 3,
    threshold: float = DEFAULT_CMVD_THRESHOLD,
    bounds: tuple[float, float, float] = DEFAULT_BAND_BOUNDS,
) -> TmpfcResult:
    """Bundle QC, counts, classification, and banding for one case."""
    raw = compute_tmpfc(det)
    qc = apply_qc(det, raw, min_peak=min_peak, min_tmpfc=min_tmpfc,
                  f2_confirm_frames=f2_confirm_frames)
    if qc.verdict is not QcVerdict.PASS:
        return TmpfcResult(
            case_id=curve.case_id, territory=curve.territory,
            fps_raw=curve.fps_raw, qc=qc,
        )
    normalized = normalize_tmpfc(raw, curve.fps_raw)
    return TmpfcResult(
        case_id=curve.case_id,
        territory=curve.territory,
        fps_raw=curve.fps_raw,
        qc=qc,
        tmpfc_raw=raw,
        tmpfc_normalized=normalized,
        cmvd_positive=classify_cmvd(normalized, threshold),
        band=stratify(normalized, bounds),
    )
