"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` so callers (and the
CLI) can branch on failure modes without parsing messages.
"""


class TmpfcError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class ManifestError(TmpfcError):
    """Manifest file missing, malformed, or violating its invariants."""


class MaskLoadError(TmpfcError):
    """Mask frame unreadable, not PGM, or mismatching the manifest."""


class DetectionRecordError(TmpfcError):
    """Stenosis detection record file malformed."""


class PreprocessError(TmpfcError):
    """Frame cleaning parameters out of range for the frame geometry."""


class CurveError(TmpfcError):
    """Opacity curve empty or otherwise unusable."""


class StatsError(TmpfcError):
    """Statistical routine preconditions not met."""


class SynthError(TmpfcError):
    """Synthetic sequence parameters inconsistent."""


class ConfigError(TmpfcError):
    """Run configuration file unreadable or invalid."""
