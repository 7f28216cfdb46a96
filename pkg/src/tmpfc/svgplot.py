"""Hand-rolled SVG plots.

SVG keeps the outputs textual and diffable in golden tests: fixed float
formatting, no timestamps, no library-generated ids. Nothing here aims to
be a plotting framework; it covers exactly the report figures the CLI
emits (curve, agreement pair, ROC, scatter with fit, grouped boxes).
"""

from __future__ import annotations

import math

WIDTH = 640
HEIGHT = 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 16, 34, 48

_COLORS = {
    "raw": "#9db4c8",
    "smooth": "#1f5fa8",
    "accent": "#c23b22",
    "soft": "#7a9a58",
    "gray": "#888888",
    "fill": "#1f5fa8",
}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _fmt_tick(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return f"{v:.4g}"


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions on the 1/2/5 ladder covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw_step = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw_step))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if raw_step <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + step * 1e-9:
        ticks.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return ticks


def _pad_range(lo: float, hi: float, frac: float = 0.05) -> tuple[float, float]:
    if hi <= lo:
        pad = abs(lo) * frac + 1.0
        return lo - pad, hi + pad
    pad = (hi - lo) * frac
    return lo - pad, hi + pad


class SvgCanvas:
    """Fixed-size plot area with data-space helpers."""

    def __init__(self, x_range, y_range, title="", x_label="", y_label=""):
        self.x0, self.x1 = float(x_range[0]), float(x_range[1])
        self.y0, self.y1 = float(y_range[0]), float(y_range[1])
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.body: list[str] = []

    def px(self, x: float) -> float:
        span = WIDTH - MARGIN_L - MARGIN_R
        return MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * span

    def py(self, y: float) -> float:
        span = HEIGHT - MARGIN_T - MARGIN_B
        return HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * span

    def polyline(self, points, color, width=1.5, dash=None):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in points)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.body.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{width}"'
            f'{dash_attr} points="{pts}"/>'
        )

    def polygon(self, points, fill, opacity=0.15):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in points)
        self.body.append(f'<polygon fill="{fill}" fill-opacity="{opacity}" points="{pts}"/>')

    def circles(self, points, color, r=2.5):
        for x, y in points:
            self.body.append(
                f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" '
                f'r="{r}" fill="{color}" fill-opacity="0.75"/>'
            )

    def hline(self, y, color, dash="5,4", label=None):
        self.polyline([(self.x0, y), (self.x1, y)], color, width=1.2, dash=dash)
        if label:
            self.body.append(
                f'<text x="{WIDTH - MARGIN_R - 4}" y="{_fmt(self.py(y) - 4)}" '
                f'text-anchor="end" font-size="11" fill="{color}">{label}</text>'
            )

    def vline(self, x, color, dash="5,4", label=None):
        self.polyline([(x, self.y0), (x, self.y1)], color, width=1.2, dash=dash)
        if label:
            self.body.append(
                f'<text x="{_fmt(self.px(x) + 4)}" y="{MARGIN_T + 12}" '
                f'font-size="11" fill="{color}">{label}</text>'
            )

    def box(self, x_center, half_width, q1, med, q3, lo, hi, color):
        xl, xr = x_center - half_width, x_center + half_width
        self.polyline([(x_center, lo), (x_center, q1)], color)
        self.polyline([(x_center, q3), (x_center, hi)], color)
        self.polyline([(xl, lo), (xr, lo)], color)
        self.polyline([(xl, hi), (xr, hi)], color)
        self.body.append(
            f'<rect x="{_fmt(self.px(xl))}" y="{_fmt(self.py(q3))}" '
            f'width="{_fmt(self.px(xr) - self.px(xl))}" '
            f'height="{_fmt(self.py(q1) - self.py(q3))}" '
            f'fill="{color}" fill-opacity="0.25" stroke="{color}"/>'
        )
        self.polyline([(xl, med), (xr, med)], color, width=2.0)

    def annotate(self, text, line=0):
        self.body.append(
            f'<text x="{MARGIN_L + 8}" y="{MARGIN_T + 16 + 14 * line}" '
            f'font-size="12" fill="#333333">{text}</text>'
        )

    def _axes(self, x_tick_labels=None) -> list[str]:
        parts = [
            f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
            f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="#333333"/>'
        ]
        if x_tick_labels is None:
            for tx in nice_ticks(self.x0, self.x1):
                if not self.x0 <= tx <= self.x1:
                    continue
                parts.append(
                    f'<line x1="{_fmt(self.px(tx))}" y1="{HEIGHT - MARGIN_B}" '
                    f'x2="{_fmt(self.px(tx))}" y2="{HEIGHT - MARGIN_B + 5}" stroke="#333333"/>'
                    f'<text x="{_fmt(self.px(tx))}" y="{HEIGHT - MARGIN_B + 18}" '
                    f'text-anchor="middle" font-size="11">{_fmt_tick(tx)}</text>'
                )
        else:
            for tx, label in x_tick_labels:
                parts.append(
                    f'<text x="{_fmt(self.px(tx))}" y="{HEIGHT - MARGIN_B + 18}" '
                    f'text-anchor="middle" font-size="11">{label}</text>'
                )
        for ty in nice_ticks(self.y0, self.y1):
            if not self.y0 <= ty <= self.y1:
                continue
            parts.append(
                f'<line x1="{MARGIN_L - 5}" y1="{_fmt(self.py(ty))}" '
                f'x2="{MARGIN_L}" y2="{_fmt(self.py(ty))}" stroke="#333333"/>'
                f'<text x="{MARGIN_L - 8}" y="{_fmt(self.py(ty) + 4)}" '
                f'text-anchor="end" font-size="11">{_fmt_tick(ty)}</text>'
            )
        return parts

    def render(self, x_tick_labels=None) -> str:
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        if self.title:
            parts.append(
                f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" '
                f'font-size="14">{self.title}</text>'
            )
        parts.extend(self._axes(x_tick_labels))
        parts.extend(self.body)
        if self.x_label:
            parts.append(
                f'<text x="{WIDTH // 2}" y="{HEIGHT - 10}" text-anchor="middle" '
                f'font-size="12">{self.x_label}</text>'
            )
        if self.y_label:
            parts.append(
                f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" font-size="12" '
                f'transform="rotate(-90 16 {HEIGHT // 2})">{self.y_label}</text>'
            )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def curve_plot(raw, smoothed, det, title="") -> str:
    """Raw and smoothed counts with detected frames and thresholds marked."""
    n = len(raw)
    top = max(max(raw), 1)
    canvas = SvgCanvas((0, n - 1), _pad_range(0, top), title=title,
                       x_label="frame index", y_label="vessel pixels")
    canvas.polyline(list(enumerate(raw)), _COLORS["raw"], width=1.2)
    canvas.polyline(list(enumerate(smoothed)), _COLORS["smooth"], width=1.8)
    canvas.hline(det.t_f1, _COLORS["soft"], label=f"fill thr {det.t_f1:.6g}")
    canvas.hline(det.t_f2, _COLORS["accent"], label=f"clear thr {det.t_f2:.6g}")
    if det.f1 is not None:
        canvas.vline(det.f1, _COLORS["soft"], label=f"f1={det.f1}")
    if det.f2 is not None:
        canvas.vline(det.f2, _COLORS["accent"], label=f"f2={det.f2}")
    return canvas.render()


def bland_altman_plot(a, b, report, title="Agreement") -> str:
    means = [(x + y) / 2.0 for x, y in zip(a, b)]
    diffs = [x - y for x, y in zip(a, b)]
    y_lo = min(min(diffs), report.loa_low)
    y_hi = max(max(diffs), report.loa_high)
    canvas = SvgCanvas(_pad_range(min(means), max(means)), _pad_range(y_lo, y_hi),
                       title=title, x_label="mean of pair", y_label="difference")
    canvas.hline(report.bias, _COLORS["smooth"], dash=None, label=f"bias {report.bias:.3g}")
    canvas.hline(report.loa_low, _COLORS["accent"], label=f"loa {report.loa_low:.3g}")
    canvas.hline(report.loa_high, _COLORS["accent"], label=f"loa {report.loa_high:.3g}")
    canvas.circles(zip(means, diffs), _COLORS["fill"])
    return canvas.render()


def scatter_fit_plot(x, y, fit=None, ci_band=None, title="", x_label="x", y_label="y",
                     annotation="") -> str:
    canvas = SvgCanvas(_pad_range(min(x), max(x)), _pad_range(min(y), max(y)),
                       title=title, x_label=x_label, y_label=y_label)
    if ci_band is not None:
        xs, lo, hi = ci_band
        ring = list(zip(xs, lo)) + list(zip(xs[::-1], hi[::-1]))
        canvas.polygon(ring, _COLORS["smooth"])
    if fit is not None:
        canvas.polyline(fit, _COLORS["smooth"], width=1.8)
    canvas.circles(zip(x, y), _COLORS["fill"])
    if annotation:
        canvas.annotate(annotation)
    return canvas.render()


def roc_plot(roc, title="ROC") -> str:
    canvas = SvgCanvas((0.0, 1.0), (0.0, 1.0), title=title,
                       x_label="1 - specificity", y_label="sensitivity")
    canvas.polyline([(0.0, 0.0), (1.0, 1.0)], _COLORS["gray"], width=1.0, dash="3,3")
    pts = [(0.0, 0.0)] + [(1.0 - spec, sens) for _, sens, spec in roc.points]
    canvas.polyline(pts, _COLORS["smooth"], width=1.8)
    for thr, sens, spec in roc.points:
        if thr == roc.youden_threshold:
            canvas.circles([(1.0 - spec, sens)], _COLORS["accent"], r=4)
    canvas.annotate(f"auc={roc.auc:.4g} youden thr={roc.youden_threshold:.6g}")
    return canvas.render()


def _box_stats(values):
    s = sorted(values)

    def q(level):
        h = (len(s) - 1) * level
        lo = math.floor(h)
        if lo >= len(s) - 1:
            return float(s[-1])
        return s[lo] + (h - lo) * (s[lo + 1] - s[lo])

    q1, med, q3 = q(0.25), q(0.5), q(0.75)
    iqr = q3 - q1
    lo = min(v for v in s if v >= q1 - 1.5 * iqr)
    hi = max(v for v in s if v <= q3 + 1.5 * iqr)
    fliers = [v for v in s if v < lo or v > hi]
    return q1, med, q3, lo, hi, fliers


def grouped_box_plot(groups, labels, title="", y_label="value", annotation="") -> str:
    """One box per ordered group, fliers drawn individually."""
    flat = [v for g in groups for v in g]
    canvas = SvgCanvas((-0.6, len(groups) - 0.4), _pad_range(min(flat), max(flat)),
                       title=title, y_label=y_label)
    for i, group in enumerate(groups):
        q1, med, q3, lo, hi, fliers = _box_stats(group)
        canvas.box(i, 0.22, q1, med, q3, lo, hi, _COLORS["smooth"])
        canvas.circles([(i, v) for v in fliers], _COLORS["accent"], r=2)
    if annotation:
        canvas.annotate(annotation)
    ticks = [(i, label) for i, label in enumerate(labels)]
    return canvas.render(x_tick_labels=ticks)
