"""Shared fixtures: the canonical worked example and the random curve corpus."""

import numpy as np
import pytest

from tmpfc.ingest import Territory
from tmpfc.preprocess import OpacityCurve
from tmpfc.synth import SynthParams, _phase_values

# 21-frame hand-traced curve used across the detect/quantify tests
FIXTURE_A = (5, 8, 100, 800, 950, 1000, 990, 980, 600, 200,
             90, 50, 30, 15, 10, 8, 6, 5, 4, 4, 3)

CORPUS_SEED = 0x7C4F_11E5
CORPUS_SIZE = 10_000

_TERRITORIES = (Territory.LAD, Territory.LCX, Territory.RCA)


@pytest.fixture
def fixture_curve():
    return OpacityCurve(case_id="fixture", territory=Territory.LAD,
                        fps_raw=15.0, a=FIXTURE_A)


def random_transit_params(rng: np.random.Generator) -> SynthParams:
    """Random but valid phase layout, lengths 15-300, noise up to 5% of peak."""
    length = int(rng.integers(15, 301))
    rise_start = int(rng.integers(0, length - 2))
    plateau_start = int(rng.integers(rise_start + 1, length))
    washout_start = int(rng.integers(plateau_start, length))
    peak = int(rng.integers(850, 20_001))
    baseline = int(rng.integers(0, peak // 2 + 1))
    return SynthParams(
        length=length,
        fps=float(rng.choice((7.5, 15.0, 30.0))),
        baseline=baseline,
        peak=peak,
        rise_start=rise_start,
        plateau_start=plateau_start,
        washout_start=washout_start,
        washout_tau=float(rng.uniform(1.0, 12.0)),
        noise_sd=float(rng.uniform(0.0, 0.05) * peak),
        seed=int(rng.integers(0, 2**62)),
    )


def make_noisy_curve(params: SynthParams, territory: Territory) -> OpacityCurve:
    """Curve values exactly as gen_curve would produce, skipping truth work."""
    base = _phase_values(params)
    if params.noise_sd > 0:
        noise = np.random.default_rng(params.seed).normal(0.0, params.noise_sd, params.length)
        values = np.rint(np.clip(base + noise, 0.0, None))
    else:
        values = np.rint(base)
    return OpacityCurve(
        case_id=f"corpus-{params.seed:x}", territory=territory,
        fps_raw=params.fps, a=tuple(int(v) for v in values.astype(np.int64)),
    )


@pytest.fixture(scope="session")
def curve_corpus() -> list[OpacityCurve]:
    """10,000 seeded random synthetic curves shared by the acceptance tests."""
    rng = np.random.default_rng(CORPUS_SEED)
    return [
        make_noisy_curve(random_transit_params(rng), _TERRITORIES[i % 3])
        for i in range(CORPUS_SIZE)
    ]
