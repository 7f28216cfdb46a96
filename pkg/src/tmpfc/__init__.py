"""Myocardial perfusion frame counting from vessel-territory mask sequences.

The pipeline turns a stack of binary territory masks into a transit frame
count: clean each frame, count vessel pixels per frame, detect the initial
filling and first clearance frames around the opacification peak, apply
quality control, and normalize the count to the 30 fps reference rate.
A synthetic-sequence generator with an independent brute-force detection
oracle and a validation statistics toolkit round out the package.
"""

from .detect import (
    DetectionParams,
    FrameDetection,
    TerritoryProfile,
    detect_frames,
    median_filter,
    median_window_size,
)
from .errors import TmpfcError
from .ingest import (
    DetectionRecord,
    GateDecision,
    Manifest,
    MaskSequence,
    Route,
    Territory,
    gate_route,
    load_detection_records,
    load_manifest,
    load_mask_sequence,
)
from .preprocess import (
    OpacityCurve,
    PreprocessParams,
    extract_opacity_curve,
    remove_small_components,
    strip_border,
)
from .quantify import (
    Band,
    QcStatus,
    QcVerdict,
    SeverityBand,
    TmpfcResult,
    apply_qc,
    classify_cmvd,
    compute_tmpfc,
    normalize_tmpfc,
    quantify_detection,
    stratify,
)
from .stats import (
    AgreementReport,
    DiagnosticReport,
    RocReport,
    StudyRecord,
    TrendAlternative,
    TrendReport,
    bland_altman,
    diagnostic_metrics,
    jonckheere_terpstra,
    pearson,
    roc_auc,
    youden_threshold,
)
from .synth import (
    OracleResult,
    SynthParams,
    SynthSequence,
    gen_cohort,
    gen_curve,
    oracle_f1_f2,
    render_masks,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementReport", "Band", "DetectionParams", "DetectionRecord",
    "DiagnosticReport", "FrameDetection", "GateDecision", "Manifest",
    "MaskSequence", "OpacityCurve", "OracleResult", "PreprocessParams",
    "QcStatus", "QcVerdict", "RocReport", "Route", "SeverityBand",
    "StudyRecord", "SynthParams", "SynthSequence", "Territory",
    "TerritoryProfile", "TmpfcError", "TmpfcResult", "TrendAlternative",
    "TrendReport", "apply_qc", "bland_altman", "classify_cmvd",
    "compute_tmpfc", "detect_frames", "diagnostic_metrics",
    "extract_opacity_curve", "gate_route", "gen_cohort", "gen_curve",
    "jonckheere_terpstra", "load_detection_records", "load_manifest",
    "load_mask_sequence", "median_filter", "median_window_size",
    "normalize_tmpfc", "oracle_f1_f2", "pearson", "quantify_detection",
    "remove_small_components", "render_masks", "roc_auc", "strip_border",
    "stratify", "youden_threshold",
]
