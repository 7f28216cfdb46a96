"""Case loading: manifests, mask sequences, and stenosis detection records.

A case on disk is a JSON manifest plus one PGM file per frame. Stenosis
detection output arrives separately as a JSON array of per-case lesion
records and is used only to gate cases into or out of frame counting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DetectionRecordError, ManifestError, MaskLoadError
from .pgm import read_pgm, write_pgm

VESSEL_THRESHOLD = 127  # pixel values above this count as vessel


class Territory(str, Enum):
    LAD = "LAD"
    LCX = "LCX"
    RCA = "RCA"


class GroupLabel(str, Enum):
    A_OBSTRUCTIVE = "A_obstructive"
    B_CMVD = "B_cmvd"
    C_CONTROL = "C_control"


class Severity(str, Enum):
    NON_OBSTRUCTIVE = "non_obstructive"
    OBSTRUCTIVE = "obstructive"


class Route(str, Enum):
    PROCEED_TMPFC = "PROCEED_TMPFC"
    EXCLUDE_OBSTRUCTIVE = "EXCLUDE_OBSTRUCTIVE"


@dataclass(frozen=True)
class Manifest:
    case_id: str
    territory: Territory
    fps_raw: float
    width: int
    height: int
    frame_paths: tuple[Path, ...]
    group_label: GroupLabel | None = None


@dataclass
class MaskSequence:
    """Ordered stack of binary territory masks, shape (frames, height, width)."""

    manifest: Manifest
    frames: np.ndarray

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class Lesion:
    box: tuple[int, int, int, int]  # x_min, y_min, x_max, y_max
    severity_class: Severity
    confidence: float


@dataclass(frozen=True)
class DetectionRecord:
    case_id: str
    lesions: tuple[Lesion, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class GateDecision:
    case_id: str
    route: Route
    reason: str


def load_manifest(path) -> Manifest:
    """Load and validate a case manifest.

    Relative frame paths are resolved against the manifest's directory.

    Raises:
        ManifestError: MISSING_FIELD, BAD_FPS, EMPTY_FRAMES, UNKNOWN_TERRITORY,
            or BAD_DIMENSIONS.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError("IO_ERROR", f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError("PARSE_ERROR", f"{path}: {exc}") from exc

    for key in ("case_id", "territory", "fps_raw", "width", "height", "frames"):
        if key not in doc:
            raise ManifestError("MISSING_FIELD", f"{path}: manifest lacks '{key}'")

    try:
        territory = Territory(doc["territory"])
    except ValueError:
        raise ManifestError(
            "UNKNOWN_TERRITORY", f"{path}: territory {doc['territory']!r}"
        ) from None

    fps = doc["fps_raw"]
    if not isinstance(fps, (int, float)) or isinstance(fps, bool) or not fps > 0:
        raise ManifestError("BAD_FPS", f"{path}: fps_raw must be > 0, got {fps!r}")

    width, height = doc["width"], doc["height"]
    if not (isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0):
        raise ManifestError("BAD_DIMENSIONS", f"{path}: width/height must be positive ints")

    frames = doc["frames"]
    if not isinstance(frames, list) or not frames:
        raise ManifestError("EMPTY_FRAMES", f"{path}: manifest lists no frames")

    group = None
    if doc.get("group_label") is not None:
        try:
            group = GroupLabel(doc["group_label"])
        except ValueError:
            raise ManifestError(
                "UNKNOWN_GROUP_LABEL", f"{path}: group_label {doc['group_label']!r}"
            ) from None

    base = path.parent
    frame_paths = tuple(
        p if p.is_absolute() else base / p for p in (Path(f) for f in frames)
    )
    return Manifest(
        case_id=str(doc["case_id"]),
        territory=territory,
        fps_raw=float(fps),
        width=width,
        height=height,
        frame_paths=frame_paths,
        group_label=group,
    )


def load_mask_sequence(manifest: Manifest) -> MaskSequence:
    """Read every frame of a manifest as a boolean vessel mask.

    Pixel values above VESSEL_THRESHOLD map to True so that soft upstream
    masks binarize consistently.

    Raises:
        MaskLoadError: IO_ERROR, FORMAT_ERROR, or DIMENSION_MISMATCH.
    """
    n = len(manifest.frame_paths)
    frames = np.empty((n, manifest.height, manifest.width), dtype=bool)
    for i, frame_path in enumerate(manifest.frame_paths):
        arr = read_pgm(frame_path)
        if arr.shape != (manifest.height, manifest.width):
            raise MaskLoadError(
                "DIMENSION_MISMATCH",
                f"{frame_path}: frame is {arr.shape[1]}x{arr.shape[0]}, "
                f"manifest says {manifest.width}x{manifest.height}",
            )
        frames[i] = arr > VESSEL_THRESHOLD
    return MaskSequence(manifest=manifest, frames=frames)


def save_mask_sequence(case_dir, seq: MaskSequence) -> Path:
    """Write a mask sequence as manifest.json plus one P5 frame per mask.

    Returns the manifest path. Frame files land under case_dir/frames/.
    """
    case_dir = Path(case_dir)
    frames_dir = case_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    m = seq.manifest
    rel_paths = []
    for i in range(len(seq)):
        rel = f"frames/frame_{i:04d}.pgm"
        write_pgm(case_dir / rel, seq.frames[i])
        rel_paths.append(rel)
    doc = {
        "case_id": m.case_id,
        "territory": m.territory.value,
        "fps_raw": m.fps_raw,
        "width": m.width,
        "height": m.height,
        "frames": rel_paths,
    }
    if m.group_label is not None:
        doc["group_label"] = m.group_label.value
    manifest_path = case_dir / "manifest.json"
    manifest_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return manifest_path


def _parse_lesion(obj, where: str) -> Lesion:
    if not isinstance(obj, dict):
        raise DetectionRecordError("PARSE_ERROR", f"{where}: lesion must be an object")
    try:
        box = tuple(int(v) for v in obj["box"])
        severity = Severity(obj["severity_class"])
        confidence = float(obj["confidence"])
    except (KeyError, ValueError, TypeError) as exc:
        raise DetectionRecordError("PARSE_ERROR", f"{where}: {exc}") from exc
    if len(box) != 4:
        raise DetectionRecordError("PARSE_ERROR", f"{where}: box needs 4 coordinates")
    x0, y0, x1, y1 = box
    if min(box) < 0 or x0 >= x1 or y0 >= y1:
        raise DetectionRecordError(
            "PARSE_ERROR", f"{where}: box {box} not ordered and non-negative"
        )
    if not 0.0 <= confidence <= 1.0:
        raise DetectionRecordError(
            "PARSE_ERROR", f"{where}: confidence {confidence} outside [0, 1]"
        )
    return Lesion(box=box, severity_class=severity, confidence=confidence)


def load_detection_records(path) -> list[DetectionRecord]:
    """Load a JSON array of per-case stenosis detection records.

    Raises:
        DetectionRecordError: PARSE_ERROR (with position context) or
            DUPLICATE_CASE.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DetectionRecordError("IO_ERROR", f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DetectionRecordError(
            "PARSE_ERROR", f"{path}: line {exc.lineno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, list):
        raise DetectionRecordError("PARSE_ERROR", f"{path}: expected a JSON array")

    records: list[DetectionRecord] = []
    seen: set[str] = set()
    for i, entry in enumerate(doc):
        where = f"{path}: record {i}"
        if not isinstance(entry, dict) or "case_id" not in entry:
            raise DetectionRecordError("PARSE_ERROR", f"{where}: needs case_id")
        case_id = str(entry["case_id"])
        if case_id in seen:
            raise DetectionRecordError("DUPLICATE_CASE", f"{where}: case_id {case_id!r} repeated")
        seen.add(case_id)
        lesions = tuple(
            _parse_lesion(lesion, f"{where} ({case_id})")
            for lesion in entry.get("lesions", [])
        )
        records.append(DetectionRecord(case_id=case_id, lesions=lesions))
    return records


def gate_route(record: DetectionRecord) -> GateDecision:
    """Route a case into frame counting unless any lesion is obstructive.

    The blocking lesion named in the reason is chosen by smallest bounding
    box so the decision text does not depend on lesion order.
    """
    obstructive = [l for l in record.lesions if l.severity_class is Severity.OBSTRUCTIVE]
    if obstructive:
        blocking = min(obstructive, key=lambda l: l.box)
        return GateDecision(
            case_id=record.case_id,
            route=Route.EXCLUDE_OBSTRUCTIVE,
            reason=f"obstructive lesion at box {list(blocking.box)}",
        )
    return GateDecision(
        case_id=record.case_id,
        route=Route.PROCEED_TMPFC,
        reason="no obstructive lesion",
    )
