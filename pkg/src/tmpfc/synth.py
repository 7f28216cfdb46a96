"""Synthetic perfusion sequences with analytically known ground truth.

Curves follow the canonical transit morphology: flat baseline, monotone
rise, plateau at the peak, exponential washout floored at the baseline.
Ground truth for f1/f2 is defined by `oracle_f1_f2` run on the noise-free
curve, because under extreme parameters the detection rules themselves,
not the phase markers, decide where the frames land.

`oracle_f1_f2` is a deliberately naive reimplementation of the detection
rules: per-window sorts, linear scans, no numpy, and no code shared with
the detect module. Its whole purpose is to disagree with `detect_frames`
if either side drifts from the rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detect import DetectionParams
from .errors import SynthError
from .ingest import GroupLabel, Manifest, MaskSequence, Territory
from .preprocess import OpacityCurve, default_border_band, default_min_component_area
from .stats import StudyRecord

# ---------------------------------------------------------------------------
# parameters and containers


@dataclass(frozen=True)
class SynthParams:
    """Phase layout and artifact settings for one synthetic sequence."""

    length: int
    fps: float
    baseline: int
    peak: int
    rise_start: int
    plateau_start: int
    washout_start: int
    washout_tau: float
    noise_sd: float = 0.0
    speck_count: int = 0
    border_blob: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.rise_start < self.plateau_start <= self.washout_start < self.length:
            raise SynthError(
                "INVALID_PHASES",
                f"need rise_start < plateau_start <= washout_start < length, got "
                f"{self.rise_start}, {self.plateau_start}, {self.washout_start}, {self.length}",
            )
        if self.peak <= self.baseline:
            raise SynthError("INVALID_PHASES", f"peak {self.peak} <= baseline {self.baseline}")
        if self.baseline < 0 or self.washout_tau <= 0 or self.noise_sd < 0:
            raise SynthError("INVALID_PHASES", "baseline, tau, noise_sd out of range")
        if self.fps <= 0:
            raise SynthError("INVALID_PHASES", f"fps must be > 0, got {self.fps}")


@dataclass
class SynthSequence:
    curve: OpacityCurve
    truth_f1: int | None
    truth_f2: int | None
    params: SynthParams
    noise_free: tuple[int, ...]
    masks: MaskSequence | None = None


@dataclass(frozen=True)
class OracleResult:
    window: int
    f_max: int
    a_max: int
    w_lo: int
    w_hi: int
    t_f1: float
    t1: float
    t2: float
    t_f2: float
    f1: int | None
    f1_confirmed: bool
    f2: int | None
    f2_confirm_count: int


# ---------------------------------------------------------------------------
# brute-force oracle (pure python, no shared code with detect)


def _naive_quantile(values, q):
    s = sorted(values)
    h = (len(s) - 1) * q
    lo = math.floor(h)
    if lo >= len(s) - 1:
        return float(s[-1])
    return float(s[lo] + (h - lo) * (s[lo + 1] - s[lo]))


def _naive_smooth(a, window):
    n = len(a)
    half = window // 2
    out = []
    for t in range(n):
        vals = sorted(a[min(max(j, 0), n - 1)] for j in range(t - half, t + half + 1))
        out.append(float(vals[len(vals) // 2]))
    return out


def oracle_f1_f2(curve, params: DetectionParams | None = None) -> OracleResult:
    """Reference detection by exhaustive scanning.

    Accepts an OpacityCurve or any sequence of per-frame counts.
    """
    if params is None:
        params = DetectionParams()
    a = list(getattr(curve, "a", curve))
    n = len(a)
    if n == 0:
        raise SynthError("EMPTY_INPUT", "oracle needs a non-empty curve")

    w = math.floor(params.median_frac * n + 0.5)
    if w % 2 == 0:
        w += 1
    w = min(max(w, params.median_min), params.median_max)
    s = _naive_smooth(a, w)

    f_max, a_max = 0, a[0]
    for t in range(1, n):
        if a[t] > a_max:
            f_max, a_max = t, a[t]

    w_lo = max(0, f_max - params.n1 // 2)
    w_hi = min(n - 1, f_max + math.ceil(params.n1 / 2) - 1)
    t_f1 = max(_naive_quantile(s[w_lo : w_hi + 1], params.q_fill), params.delta1 * a_max)

    run_start = f_max
    while run_start > 0 and s[run_start - 1] >= t_f1:
        run_start -= 1
    f1, f1_confirmed = None, False
    for cand in range(run_start, f_max + 1):
        ok = True
        for k in range(1, params.f1_confirm_frames + 1):
            if s[min(cand + k, f_max)] < s[min(cand + k - 1, f_max)]:
                ok = False
                break
        if ok:
            f1, f1_confirmed = cand, True
            break

    head = s[: min(params.n2, n)]
    tail = s[max(0, n - params.n2) :]
    t1 = _naive_quantile(head, params.q_fill)
    t2 = _naive_quantile(tail, params.q_fill)
    t_f2 = min(t1, t2, params.delta2 * a_max)

    f2, f2_confirm_count = None, 0
    t = f_max + 1
    while t < n:
        if s[t] > t_f2:
            t += 1
            continue
        span = min(params.f2_confirm_frames, n - 1 - t)
        rebound = None
        for k in range(1, span + 1):
            if s[t + k] > t_f2:
                rebound = t + k
                break
        if rebound is None:
            f2, f2_confirm_count = t, span
            break
        t = rebound + 1

    return OracleResult(
        window=w, f_max=f_max, a_max=a_max, w_lo=w_lo, w_hi=w_hi,
        t_f1=t_f1, t1=t1, t2=t2, t_f2=t_f2,
        f1=f1, f1_confirmed=f1_confirmed, f2=f2, f2_confirm_count=f2_confirm_count,
    )


# ---------------------------------------------------------------------------
# curve generation


def _phase_values(p: SynthParams) -> np.ndarray:
    t = np.arange(p.length, dtype=float)
    values = np.full(p.length, float(p.baseline))
    rise = (t >= p.rise_start) & (t < p.plateau_start)
    # linear climb that first reaches the peak exactly at plateau_start
    frac = (t[rise] - p.rise_start) / (p.plateau_start - p.rise_start)
    values[rise] = p.baseline + (p.peak - p.baseline) * frac
    values[(t >= p.plateau_start) & (t < p.washout_start)] = float(p.peak)
    wash = t >= p.washout_start
    decay = p.peak * np.exp(-(t[wash] - p.washout_start) / p.washout_tau)
    values[wash] = np.maximum(float(p.baseline), decay)
    return values


def gen_curve(
    params: SynthParams,
    territory: Territory = Territory.LAD,
    case_id: str | None = None,
    detection_params: DetectionParams | None = None,
) -> SynthSequence:
    """Generate one curve; truth frames come from the oracle on the
    noise-free version. Identical params give bitwise-identical output."""
    base = _phase_values(params)
    noise_free = tuple(int(v) for v in np.rint(base).astype(np.int64))
    if params.noise_sd > 0:
        rng = np.random.default_rng(params.seed)
        noisy = np.rint(np.clip(base + rng.normal(0.0, params.noise_sd, params.length), 0.0, None))
        a = tuple(int(v) for v in noisy.astype(np.int64))
    else:
        a = noise_free
    truth = oracle_f1_f2(noise_free, detection_params)
    if case_id is None:
        case_id = f"synth-{params.seed & 0xFFFFFFFFFFFFFFFF:016x}"
    curve = OpacityCurve(case_id=case_id, territory=territory, fps_raw=params.fps, a=a)
    return SynthSequence(
        curve=curve, truth_f1=truth.f1, truth_f2=truth.f2,
        params=params, noise_free=noise_free,
    )


# ---------------------------------------------------------------------------
# mask rendering


def _pixel_order(width: int, height: int, band: int) -> tuple[np.ndarray, np.ndarray]:
    """Interior pixels sorted by distance from a slightly offset center.

    The sub-pixel center offset makes squared distances unique in practice,
    so a prefix of the order is a connected quasi-disk with an exact pixel
    count. Returns (flat_indices, squared_distances) in draw order.
    """
    cy = (height - 1) / 2.0 + 0.1237
    cx = (width - 1) / 2.0 + 0.2719
    yy, xx = np.mgrid[0:height, 0:width]
    d2 = (yy - cy) ** 2 + (xx - cx) ** 2
    inside = (yy >= band) & (yy < height - band) & (xx >= band) & (xx < width - band)
    flat = np.flatnonzero(inside.ravel())
    order = flat[np.argsort(d2.ravel()[flat], kind="stable")]
    return order, d2.ravel()[order]


def render_masks(
    seq: SynthSequence, width: int, height: int,
    group_label: GroupLabel | None = None,
) -> MaskSequence:
    """Rasterize the curve as one centered quasi-disk per frame.

    Each frame's disk contains exactly curve.a[t] pixels, all clear of the
    default border band. Requested specks (4 px or fewer, never touching
    the disk) and an optional blob fully inside the border band are added
    on top; default cleaning removes every artifact, so the cleaned count
    recovers a[t] exactly whenever a[t] is 0 or at least the minimum
    component area. Counts in between cannot survive area filtering;
    generators avoid them by keeping baselines at or above it.
    """
    p = seq.params
    band = default_border_band(width, height)
    min_area = default_min_component_area(width, height)
    order, d2 = _pixel_order(width, height, band + 1)
    a = seq.curve.a
    max_a = max(a)
    if max_a > order.size:
        raise SynthError(
            "PEAK_TOO_LARGE",
            f"peak count {max_a} exceeds {order.size} drawable pixels "
            f"in {width}x{height} after border stripping",
        )
    disk_radius = math.sqrt(d2[max_a - 1]) if max_a > 0 else 0.0
    keep_out2 = (disk_radius + 4.0) ** 2
    cy = (height - 1) / 2.0 + 0.1237
    cx = (width - 1) / 2.0 + 0.2719

    rng = np.random.default_rng([p.seed & 0xFFFFFFFFFFFFFFFF, 0x5EC5])
    speck_offsets = [(0, 0), (0, 1), (1, 0), (1, 1)]

    frames = np.zeros((p.length, height, width), dtype=bool)
    for t in range(p.length):
        flat = frames[t].ravel()
        if a[t] > 0:
            flat[order[: a[t]]] = True
        for _ in range(p.speck_count):
            for _attempt in range(64):
                r = int(rng.integers(band + 1, height - band - 2))
                c = int(rng.integers(band + 1, width - band - 2))
                if (r - cy) ** 2 + (c - cx) ** 2 > keep_out2:
                    size = int(rng.integers(1, 5))
                    for dr, dc in speck_offsets[:size]:
                        frames[t][r + dr, c + dc] = True
                    break
        if p.border_blob and band > 0:
            blob_w = max(min_area // band + 1, 8)
            c0 = width // 4
            frames[t][0:band, c0 : min(c0 + blob_w, width)] = True

    manifest = Manifest(
        case_id=seq.curve.case_id,
        territory=seq.curve.territory,
        fps_raw=seq.curve.fps_raw,
        width=width,
        height=height,
        frame_paths=tuple(f"frames/frame_{i:04d}.pgm" for i in range(p.length)),
        group_label=group_label,
    )
    masks = MaskSequence(manifest=manifest, frames=frames)
    seq.masks = masks
    return masks


# ---------------------------------------------------------------------------
# cohort generation

_COHORT_TERRITORIES = (Territory.LAD, Territory.LCX, Territory.RCA)


def _calibrated_params(
    rng: np.random.Generator,
    target_raw: int,
    fps: float,
    member_seed: int,
    noise_sd: float,
    detection_params: DetectionParams,
) -> SynthParams:
    """Choose phase timings so the oracle transit equals target_raw frames.

    washout_start moves the clearance frame one-for-one once the sequence
    length (and with it the smoothing window) is pinned, so the adjustment
    loop converges in a couple of steps.
    """
    baseline = int(rng.integers(30, 71))
    peak = int(rng.integers(1200, 2601))
    tau = float(rng.uniform(2.0, max(2.5, min(6.5, target_raw / 6.0))))
    rise_start, plateau_start = 6, 9
    decay_est = math.ceil(tau * math.log(peak / baseline))
    length = rise_start + 3 + target_raw + decay_est // 2 + 18
    ws = max(plateau_start + 1, plateau_start + 3 + target_raw - decay_est)
    speck_count = int(rng.integers(0, 4))
    border_blob = bool(rng.random() < 0.3)

    params = None
    for _ in range(12):
        params = SynthParams(
            length=length, fps=fps, baseline=baseline, peak=peak,
            rise_start=rise_start, plateau_start=plateau_start,
            washout_start=min(ws, length - 2), washout_tau=tau,
            noise_sd=noise_sd, speck_count=speck_count,
            border_blob=border_blob, seed=member_seed,
        )
        truth = oracle_f1_f2(
            tuple(int(v) for v in np.rint(_phase_values(params)).astype(np.int64)),
            detection_params,
        )
        if truth.f1 is None or truth.f2 is None:
            length += 8
            continue
        err = (truth.f2 - truth.f1) - target_raw
        if err == 0:
            return params
        ws = max(plateau_start + 1, ws - err)
        if ws >= length - 2:
            length = ws + decay_est + 18
    return params  # within a frame or two of target; truth stays exact


def gen_cohort(
    n: int,
    cmvd_fraction: float,
    fps: float,
    seed: int,
    noise_sd: float = 0.0,
    detection_params: DetectionParams | None = None,
) -> list[tuple[SynthSequence, StudyRecord]]:
    """Generate a two-class cohort with known per-case truth.

    Positive cases draw normalized-count targets centered near 117.5 frames,
    negatives near 60, so the classes sit well apart around the shipped
    87-frame threshold. Member i derives its seed as seed XOR i, making
    members independently reproducible. Covariate ratios fall linearly with
    the normalized count plus noise, mimicking severity indicators.
    """
    if n < 2:
        raise SynthError("INVALID_PHASES", f"cohort needs n >= 2, got {n}")
    if not 0.0 < cmvd_fraction < 1.0:
        raise SynthError(
            "INVALID_PHASES", f"cmvd_fraction must lie in (0, 1), got {cmvd_fraction}"
        )
    if detection_params is None:
        detection_params = DetectionParams()
    n_pos = int(round(n * cmvd_fraction))

    cohort = []
    for i in range(n):
        member_seed = (seed ^ i) & 0xFFFFFFFFFFFFFFFF
        rng = np.random.default_rng(member_seed)
        positive = i < n_pos
        if positive:
            target_norm = float(np.clip(rng.normal(117.5, 13.0), 96.0, 160.0))
        else:
            target_norm = float(np.clip(rng.normal(60.0, 8.0), 36.0, 78.0))
        target_raw = max(12, int(round(target_norm * fps / 30.0)))

        params = _calibrated_params(
            rng, target_raw, fps, member_seed, noise_sd, detection_params
        )
        seq = gen_curve(
            params,
            territory=_COHORT_TERRITORIES[i % 3],
            case_id=f"case-{i:04d}",
            detection_params=detection_params,
        )
        if seq.truth_f1 is None or seq.truth_f2 is None:
            raise SynthError(
                "INVALID_PHASES",
                f"member {i}: calibration failed to realize a complete transit",
            )
        realized_norm = (seq.truth_f2 - seq.truth_f1) / fps * 30.0
        record = StudyRecord(
            case_id=seq.curve.case_id,
            tmpfc_manual=realized_norm,
            cmvd_label=positive,
            group_label=GroupLabel.B_CMVD if positive else GroupLabel.C_CONTROL,
            ea_ratio=float(np.clip(1.55 - 0.0065 * realized_norm + rng.normal(0.0, 0.05), 0.25, 2.5)),
            ea_prime_ratio=float(np.clip(1.42 - 0.0060 * realized_norm + rng.normal(0.0, 0.05), 0.2, 2.5)),
        )
        cohort.append((seq, record))
    return cohort


def curve_with_values(values, territory=Territory.LAD, fps=15.0, case_id="fixture") -> OpacityCurve:
    """Convenience wrapper for hand-written count sequences in tests."""
    return OpacityCurve(
        case_id=case_id, territory=territory, fps_raw=fps,
        a=tuple(int(v) for v in values),
    )
