"""Command-line surface: compute, batch, synth, and stats commands.

Exit codes: 0 success (QC pass for `compute`), 2 when `compute` finishes
but QC excludes the case (the row is still written), 1 on input, format,
or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import stats as _sps

from . import stats as mstats
from .config import RunConfig, apply_overrides, load_config
from .detect import detect_frames, median_filter
from .errors import TmpfcError
from .ingest import (
    Route,
    gate_route,
    load_detection_records,
    load_manifest,
    load_mask_sequence,
    save_mask_sequence,
)
from .preprocess import extract_opacity_curve
from .quantify import Band, QcVerdict, quantify_detection
from .report import (
    TRUTH_COLUMNS,
    ReportRow,
    rows_to_csv_text,
    write_json,
    write_rows_csv,
)
from .svgplot import (
    bland_altman_plot,
    curve_plot,
    grouped_box_plot,
    roc_plot,
    scatter_fit_plot,
)
from .synth import gen_cohort, render_masks


def process_case(manifest_path, config: RunConfig) -> tuple[ReportRow, dict]:
    """Run the full per-case pipeline and assemble the audit report."""
    manifest = load_manifest(manifest_path)
    seq = load_mask_sequence(manifest)
    curve = extract_opacity_curve(seq, config.preprocess)
    det = detect_frames(curve, config.profile)
    params = config.profile.for_territory(curve.territory)
    result = quantify_detection(
        curve, det,
        min_peak=config.min_peak, min_tmpfc=config.min_tmpfc,
        f2_confirm_frames=params.f2_confirm_frames,
        threshold=config.threshold, bounds=config.bounds,
    )
    row = ReportRow.from_result(det, result)
    smoothed = median_filter(curve, det.window).smoothed
    report = {
        "case_id": curve.case_id,
        "territory": curve.territory.value,
        "fps_raw": curve.fps_raw,
        "frames": len(curve),
        "a": list(curve.a),
        "smoothed": [float(v) for v in smoothed],
        "detection": det,
        "result": result,
    }
    return row, report


def _render_case_svg(report: dict) -> str:
    det = report["detection"]
    return curve_plot(report["a"], report["smoothed"], det,
                      title=f"{report['case_id']} ({report['territory']})")


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    bounds = getattr(args, "bounds", None)
    return apply_overrides(
        config,
        border_band=getattr(args, "border_band", None),
        min_component_area=getattr(args, "min_component_area", None),
        min_peak=getattr(args, "min_peak", None),
        min_tmpfc=getattr(args, "min_tmpfc", None),
        threshold=getattr(args, "threshold", None),
        bounds=tuple(bounds) if bounds is not None else None,
        jobs=getattr(args, "jobs", None),
    )


def _cmd_compute(args) -> int:
    config = _load_run_config(args)
    row, report = process_case(args.manifest, config)
    out_dir = Path(args.out)
    write_json(out_dir / f"{row.case_id}.json", report)
    if args.plot:
        (out_dir / f"{row.case_id}.svg").write_text(_render_case_svg(report))
    sys.stdout.write(rows_to_csv_text([row]))
    return 0 if row.qc_verdict == QcVerdict.PASS.value else 2


def _batch_worker(item) -> dict:
    manifest_path, config = item
    try:
        row, _ = process_case(manifest_path, config)
        return {"ok": True, "row": row}
    except TmpfcError as exc:
        return {"ok": False, "path": str(manifest_path), "error": str(exc)}


def _cmd_batch(args) -> int:
    config = _load_run_config(args)
    root = Path(args.manifest_dir)
    manifest_paths = sorted(root.rglob("manifest.json"))
    if not manifest_paths:
        print(f"no manifests found under {root}", file=sys.stderr)
        return 1

    detections = {}
    if args.detections:
        for record in load_detection_records(args.detections):
            detections[record.case_id] = record

    rows: list[ReportRow] = []
    failures: list[dict] = []
    gate_reasons: dict[str, str] = {}
    to_process = []
    for path in manifest_paths:
        try:
            manifest = load_manifest(path)
        except TmpfcError as exc:
            failures.append({"path": str(path), "error": str(exc)})
            continue
        record = detections.get(manifest.case_id)
        if record is not None:
            decision = gate_route(record)
            if decision.route is Route.EXCLUDE_OBSTRUCTIVE:
                rows.append(ReportRow.gate_excluded(
                    manifest.case_id, manifest.territory.value, manifest.fps_raw))
                gate_reasons[manifest.case_id] = decision.reason
                continue
        elif args.detections:
            gate_reasons[manifest.case_id] = "no detection record"
        to_process.append(path)

    jobs = max(1, config.jobs)
    items = [(p, config) for p in to_process]
    if jobs == 1 or len(items) <= 1:
        outcomes = [_batch_worker(item) for item in items]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_batch_worker, items, chunksize=4))
    for outcome in outcomes:
        if outcome["ok"]:
            rows.append(outcome["row"])
        else:
            failures.append({"path": outcome["path"], "error": outcome["error"]})

    rows.sort(key=lambda r: r.case_id)
    out_dir = Path(args.out)
    write_rows_csv(out_dir / "results.csv", rows)

    qc_counts: dict[str, int] = {}
    band_counts: dict[str, int] = {}
    for row in rows:
        qc_counts[row.qc_verdict] = qc_counts.get(row.qc_verdict, 0) + 1
        if row.band is not None:
            band_counts[row.band] = band_counts.get(row.band, 0) + 1
    write_json(out_dir / "summary.json", {
        "manifests": len(manifest_paths),
        "rows": len(rows),
        "gate_excluded": sum(
            1 for r in rows if r.qc_verdict == Route.EXCLUDE_OBSTRUCTIVE.value),
        "gate_reasons": gate_reasons,
        "failures": sorted(failures, key=lambda f: f["path"]),
        "qc_counts": qc_counts,
        "band_counts": band_counts,
    })
    return 0 if rows else 1


def _cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cohort = gen_cohort(args.n, args.cmvd_fraction, args.fps, args.seed,
                        noise_sd=args.noise_sd)
    truth_rows = []
    for seq, record in cohort:
        masks = render_masks(seq, args.width, args.height,
                             group_label=record.group_label)
        save_mask_sequence(out_dir / seq.curve.case_id, masks)
        truth_rows.append({
            "case_id": seq.curve.case_id,
            "truth_f1": seq.truth_f1,
            "truth_f2": seq.truth_f2,
            "target_normalized": record.tmpfc_manual,
            "cmvd_label": record.cmvd_label,
        })
    write_rows_csv(out_dir / "truth.csv", truth_rows, columns=TRUTH_COLUMNS)
    return 0


def _read_csv_columns(path, required: tuple[str, ...]) -> list[dict]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            fields = reader.fieldnames or []
            missing = [c for c in required if c not in fields]
            if missing:
                raise TmpfcError(
                    "MISSING_COLUMN", f"{path}: lacks column(s) {', '.join(missing)}"
                )
            return list(reader)
    except OSError as exc:
        raise TmpfcError("IO_ERROR", f"{path}: {exc}") from exc


def _parse_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes")


def _pairs_from_rows(rows, col_x, col_y) -> tuple[list[float], list[float]]:
    xs, ys = [], []
    for row in rows:
        sx, sy = row.get(col_x, ""), row.get(col_y, "")
        if sx == "" or sy == "":
            continue
        xs.append(float(sx))
        ys.append(float(sy))
    return xs, ys


def _fit_with_band(x, y):
    """OLS fit line plus 95% confidence band for the mean response."""
    x_arr = np.asarray(x, float)
    y_arr = np.asarray(y, float)
    n = x_arr.size
    dx = x_arr - x_arr.mean()
    sxx = float(dx @ dx)
    slope = float(dx @ (y_arr - y_arr.mean())) / sxx
    intercept = float(y_arr.mean() - slope * x_arr.mean())
    resid = y_arr - (intercept + slope * x_arr)
    s2 = float(resid @ resid) / (n - 2) if n > 2 else 0.0
    grid = np.linspace(x_arr.min(), x_arr.max(), 50)
    fit_y = intercept + slope * grid
    t975 = float(_sps.t.ppf(0.975, n - 2)) if n > 2 else 0.0
    half = t975 * np.sqrt(s2 * (1.0 / n + (grid - x_arr.mean()) ** 2 / sxx))
    fit = list(zip(grid.tolist(), fit_y.tolist()))
    band = (grid.tolist(), (fit_y - half).tolist(), (fit_y + half).tolist())
    return fit, band


def _flatten_report(obj, prefix="") -> dict:
    """One-level-flat mapping for the single-row CSV form of a report."""
    import dataclasses

    if dataclasses.is_dataclass(obj):
        obj = dataclasses.asdict(obj)
    flat = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if dataclasses.is_dataclass(value) or isinstance(value, dict):
            flat.update(_flatten_report(value, prefix=f"{name}_"))
        elif isinstance(value, (list, tuple)):
            flat[name] = " ".join(str(v) for v in value)
        else:
            flat[name] = value
    return flat


def _write_report_pair(out_dir: Path, name: str, payload) -> None:
    """Every stats report lands as JSON plus a single-row CSV."""
    write_json(out_dir / f"{name}.json", payload)
    flat = _flatten_report(payload)
    write_rows_csv(out_dir / f"{name}.csv", [flat], columns=tuple(flat))


def _cmd_stats(args) -> int:
    out_dir = Path(args.out)
    sub = args.analysis
    if sub == "agreement":
        rows = _read_csv_columns(args.input, ("tmpfc_auto", "tmpfc_manual"))
        auto, manual = _pairs_from_rows(rows, "tmpfc_auto", "tmpfc_manual")
        report = mstats.bland_altman(auto, manual)
        _write_report_pair(out_dir, "agreement", report)
        if args.plot:
            (out_dir / "agreement_bland_altman.svg").write_text(
                bland_altman_plot(auto, manual, report))
            fit, band = _fit_with_band(manual, auto)
            (out_dir / "agreement_scatter.svg").write_text(scatter_fit_plot(
                manual, auto, fit=fit, ci_band=band, title="Automated vs manual",
                x_label="manual", y_label="automated",
                annotation=f"r={report.pearson_r:.4g} bias={report.bias:.4g}"))
    elif sub == "roc":
        rows = _read_csv_columns(args.input, ("tmpfc_normalized", "cmvd_label"))
        scores, labels = [], []
        for row in rows:
            if row["tmpfc_normalized"] == "" or row["cmvd_label"] == "":
                continue
            scores.append(float(row["tmpfc_normalized"]))
            labels.append(_parse_bool(row["cmvd_label"]))
        roc = mstats.roc_auc(scores, labels)
        write_json(out_dir / "roc.json", roc)
        point_rows = [
            {"threshold": t, "sensitivity": se, "specificity": sp}
            for t, se, sp in roc.points
        ]
        write_rows_csv(out_dir / "roc.csv", point_rows,
                       columns=("threshold", "sensitivity", "specificity"))
        if args.plot:
            (out_dir / "roc.svg").write_text(roc_plot(roc))
    elif sub == "diagnostic":
        rows = _read_csv_columns(args.input, ("tmpfc_normalized", "cmvd_label"))
        predicted, actual = [], []
        for row in rows:
            if row["tmpfc_normalized"] == "" or row["cmvd_label"] == "":
                continue
            predicted.append(float(row["tmpfc_normalized"]) >= args.threshold)
            actual.append(_parse_bool(row["cmvd_label"]))
        report = mstats.diagnostic_metrics(predicted, actual)
        _write_report_pair(out_dir, "diagnostic",
                           {"threshold": args.threshold, "report": report})
    elif sub == "trend":
        rows = _read_csv_columns(args.input, ("band", args.covariate))
        ordered = (Band.LOW, Band.INTERMEDIATE, Band.HIGH)
        groups = {band: [] for band in ordered}
        for row in rows:
            if row[args.covariate] == "" or row["band"] not in groups:
                continue
            groups[Band(row["band"])].append(float(row[args.covariate]))
        group_values = [groups[band] for band in ordered]
        alternative = mstats.TrendAlternative(args.alternative.upper())
        report = mstats.jonckheere_terpstra(group_values, alternative)
        _write_report_pair(out_dir, "trend", {"covariate": args.covariate, "report": report})
        if args.plot:
            (out_dir / "trend.svg").write_text(grouped_box_plot(
                group_values, [band.value for band in ordered],
                title=f"{args.covariate} by severity band", y_label=args.covariate,
                annotation=f"p_trend={report.p_trend:.4g} ({report.method.value})"))
    elif sub == "correlate":
        rows = _read_csv_columns(args.input, ("tmpfc_normalized", args.covariate))
        xs, ys = _pairs_from_rows(rows, "tmpfc_normalized", args.covariate)
        result = mstats.pearson(xs, ys)
        _write_report_pair(out_dir, "correlate",
                           {"covariate": args.covariate, "result": result})
        if args.plot:
            fit, band = _fit_with_band(xs, ys)
            (out_dir / "correlate.svg").write_text(scatter_fit_plot(
                xs, ys, fit=fit, ci_band=band,
                title=f"normalized count vs {args.covariate}",
                x_label="tmpfc_normalized", y_label=args.covariate,
                annotation=f"r={result.r:.4g} p={result.p:.3g} "
                           f"ci=[{result.ci_low:.4g},{result.ci_high:.4g}]"))
    else:  # pragma: no cover - argparse restricts choices
        raise TmpfcError("BAD_SUBCOMMAND", sub)
    return 0


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--border-band", type=int, default=None,
                        help="border strip width in px (default: 2%% of min dimension)")
    parser.add_argument("--min-component-area", type=int, default=None,
                        help="minimum connected-component area in px")
    parser.add_argument("--min-peak", type=int, default=None,
                        help="minimum usable peak pixel count (default 800)")
    parser.add_argument("--min-tmpfc", type=int, default=None,
                        help="minimum plausible raw frame count (default 10)")
    parser.add_argument("--threshold", type=float, default=None,
                        help="normalized-count classification threshold (default 87)")
    parser.add_argument("--bounds", type=float, nargs=3, default=None,
                        metavar=("LOW", "MID", "HIGH"),
                        help="severity band cut points (default 87 114 124)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmpfc",
        description="Myocardial perfusion frame counting from vessel-territory masks",
        epilog="exit codes: 0 ok, 2 QC-excluded (compute only), 1 error",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_compute = sub.add_parser("compute", help="process one case manifest")
    p_compute.add_argument("manifest")
    _add_pipeline_flags(p_compute)
    p_compute.add_argument("--plot", action="store_true", help="emit an SVG curve plot")
    p_compute.set_defaults(func=_cmd_compute)

    p_batch = sub.add_parser("batch", help="process every manifest under a directory")
    p_batch.add_argument("manifest_dir")
    _add_pipeline_flags(p_batch)
    p_batch.add_argument("--detections", help="stenosis detection records JSON")
    p_batch.add_argument("--jobs", type=int, default=None, help="parallel workers")
    p_batch.set_defaults(func=_cmd_batch)

    p_synth = sub.add_parser("synth", help="generate a synthetic cohort on disk")
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--cmvd-fraction", type=float, default=0.5)
    p_synth.add_argument("--fps", type=float, default=15.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--width", type=int, default=160)
    p_synth.add_argument("--height", type=int, default=160)
    p_synth.add_argument("--noise-sd", type=float, default=0.0)
    p_synth.set_defaults(func=_cmd_synth)

    p_stats = sub.add_parser("stats", help="validation statistics over a CSV table")
    p_stats.add_argument("analysis",
                         choices=("agreement", "roc", "diagnostic", "trend", "correlate"))
    p_stats.add_argument("--input", required=True, help="input CSV")
    p_stats.add_argument("--out", default=".", help="output directory")
    p_stats.add_argument("--covariate", default="ea_ratio",
                         help="covariate column for trend/correlate")
    p_stats.add_argument("--alternative", choices=("increasing", "decreasing"),
                         default="decreasing", help="trend direction under test")
    p_stats.add_argument("--threshold", type=float, default=87.0,
                         help="classification threshold for diagnostic")
    p_stats.add_argument("--plot", action="store_true", help="emit SVG figures")
    p_stats.set_defaults(func=_cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TmpfcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
