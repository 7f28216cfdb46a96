"""Run configuration: shipped defaults, TOML config files, CLI overrides.

Precedence is defaults < config file < command-line flags. The shipped
defaults are the published parameter set; the per-territory tables exist
because detection is territory-aware even though a single set ships.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .detect import DetectionParams, TerritoryProfile
from .errors import ConfigError
from .ingest import Territory
from .preprocess import PreprocessParams
from .quantify import (
    DEFAULT_BAND_BOUNDS,
    DEFAULT_CMVD_THRESHOLD,
    DEFAULT_MIN_PEAK,
    DEFAULT_MIN_TMPFC,
)

_DETECT_KEYS = {f.name for f in dataclasses.fields(DetectionParams)}


@dataclass(frozen=True)
class RunConfig:
    profile: TerritoryProfile = field(default_factory=TerritoryProfile)
    preprocess: PreprocessParams = field(default_factory=PreprocessParams)
    min_peak: int = DEFAULT_MIN_PEAK
    min_tmpfc: int = DEFAULT_MIN_TMPFC
    threshold: float = DEFAULT_CMVD_THRESHOLD
    bounds: tuple[float, float, float] = DEFAULT_BAND_BOUNDS
    jobs: int = 1


def _detect_params(base: DetectionParams, table: dict, where: str) -> DetectionParams:
    unknown = set(table) - _DETECT_KEYS
    if unknown:
        raise ConfigError("UNKNOWN_KEY", f"{where}: {sorted(unknown)}")
    try:
        return dataclasses.replace(base, **table)
    except (ValueError, TypeError) as exc:
        raise ConfigError("BAD_VALUE", f"{where}: {exc}") from exc


def load_config(path) -> RunConfig:
    """Parse a TOML config file into a RunConfig."""
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("IO_ERROR", f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("PARSE_ERROR", f"{path}: {exc}") from exc
    return config_from_dict(doc, where=str(path))


def config_from_dict(doc: dict, where: str = "config") -> RunConfig:
    detect_table = dict(doc.get("detect", {}))
    territory_tables = {
        t: detect_table.pop(t.value, {}) for t in Territory
    }
    base = _detect_params(DetectionParams(), detect_table, f"{where}:[detect]")
    profile = TerritoryProfile(
        params={
            t: _detect_params(base, territory_tables[t], f"{where}:[detect.{t.value}]")
            for t in Territory
        }
    )

    pre_table = doc.get("preprocess", {})
    preprocess = PreprocessParams(
        border_band_px=pre_table.get("border_band"),
        min_component_area_px=pre_table.get("min_component_area"),
    )

    qc_table = doc.get("qc", {})
    cls_table = doc.get("classify", {})
    bounds = cls_table.get("bounds", list(DEFAULT_BAND_BOUNDS))
    if len(bounds) != 3 or sorted(bounds) != list(bounds):
        raise ConfigError("BAD_VALUE", f"{where}: bounds must be 3 ascending cut points")
    run_table = doc.get("run", {})

    return RunConfig(
        profile=profile,
        preprocess=preprocess,
        min_peak=int(qc_table.get("min_peak", DEFAULT_MIN_PEAK)),
        min_tmpfc=int(qc_table.get("min_tmpfc", DEFAULT_MIN_TMPFC)),
        threshold=float(cls_table.get("threshold", DEFAULT_CMVD_THRESHOLD)),
        bounds=(float(bounds[0]), float(bounds[1]), float(bounds[2])),
        jobs=int(run_table.get("jobs", 1)),
    )


def apply_overrides(
    config: RunConfig,
    border_band: int | None = None,
    min_component_area: int | None = None,
    min_peak: int | None = None,
    min_tmpfc: int | None = None,
    threshold: float | None = None,
    bounds: tuple[float, float, float] | None = None,
    jobs: int | None = None,
) -> RunConfig:
    """Layer non-None CLI flag values over a config."""
    updates = {}
    if border_band is not None or min_component_area is not None:
        updates["preprocess"] = PreprocessParams(
            border_band_px=(
                border_band if border_band is not None
                else config.preprocess.border_band_px
            ),
            min_component_area_px=(
                min_component_area if min_component_area is not None
                else config.preprocess.min_component_area_px
            ),
        )
    if min_peak is not None:
        updates["min_peak"] = min_peak
    if min_tmpfc is not None:
        updates["min_tmpfc"] = min_tmpfc
    if threshold is not None:
        updates["threshold"] = threshold
    if bounds is not None:
        if len(bounds) != 3 or sorted(bounds) != list(bounds):
            raise ConfigError("BAD_VALUE", "bounds must be 3 ascending cut points")
        updates["bounds"] = (float(bounds[0]), float(bounds[1]), float(bounds[2]))
    if jobs is not None:
        updates["jobs"] = jobs
    return dataclasses.replace(config, **updates) if updates else config
