"""Result rows and deterministic CSV/JSON emission.

Identical inputs must produce byte-identical files, so floats are written
with repr-style shortest round-trip formatting, JSON keys are sorted, and
every file is written to a temp name and atomically renamed into place.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .detect import FrameDetection
from .quantify import TmpfcResult

REPORT_COLUMNS = (
    "case_id", "territory", "fps_raw", "f_max", "a_max", "f1", "f2",
    "t_f1", "t_f2", "tmpfc_raw", "tmpfc_normalized", "qc_verdict",
    "low_confidence", "cmvd_positive", "band",
)

TRUTH_COLUMNS = ("case_id", "truth_f1", "truth_f2", "target_normalized", "cmvd_label")


@dataclass(frozen=True)
class ReportRow:
    case_id: str
    territory: str | None = None
    fps_raw: float | None = None
    f_max: int | None = None
    a_max: int | None = None
    f1: int | None = None
    f2: int | None = None
    t_f1: float | None = None
    t_f2: float | None = None
    tmpfc_raw: int | None = None
    tmpfc_normalized: float | None = None
    qc_verdict: str | None = None
    low_confidence: bool | None = None
    cmvd_positive: bool | None = None
    band: str | None = None

    @classmethod
    def from_result(cls, det: FrameDetection, result: TmpfcResult) -> "ReportRow":
        return cls(
            case_id=result.case_id,
            territory=result.territory.value,
            fps_raw=result.fps_raw,
            f_max=det.f_max,
            a_max=det.a_max,
            f1=det.f1,
            f2=det.f2,
            t_f1=det.t_f1,
            t_f2=det.t_f2,
            tmpfc_raw=result.tmpfc_raw,
            tmpfc_normalized=result.tmpfc_normalized,
            qc_verdict=result.qc.verdict.value,
            low_confidence=result.qc.low_confidence,
            cmvd_positive=result.cmvd_positive,
            band=result.band.value.value if result.band is not None else None,
        )

    @classmethod
    def gate_excluded(cls, case_id: str, territory: str, fps_raw: float) -> "ReportRow":
        return cls(
            case_id=case_id, territory=territory, fps_raw=fps_raw,
            qc_verdict="EXCLUDE_OBSTRUCTIVE",
        )


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv_text(rows, columns=REPORT_COLUMNS) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        mapping = dataclasses.asdict(row) if dataclasses.is_dataclass(row) else row
        writer.writerow([format_cell(mapping.get(col)) for col in columns])
    return buf.getvalue()


def write_rows_csv(path, rows, columns=REPORT_COLUMNS) -> None:
    atomic_write_text(path, rows_to_csv_text(rows, columns))


def json_ready(obj):
    """Recursively convert dataclasses, enums, paths, and numpy scalars."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: json_ready(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(json_ready(obj), indent=2, sort_keys=True) + "\n")
