"""Exception hierarchy shared across the package."""


class WavebandError(Exception):
    """Base class for all library errors."""


class ConfigError(WavebandError):
    """Invalid or unknown run configuration."""


class DataError(WavebandError):
    """Dataset ingestion problems."""


class ParseError(DataError):
    """Malformed cell or row in an input CSV."""


class MissingValue(DataError):
    """Empty cell where a numeric value is required."""


class SpecMismatch(DataError):
    """File contents disagree with the pinned dataset description."""


class SplitTooShort(DataError):
    """Split shorter than one lookback + horizon window."""


class UnsupportedWavelet(WavebandError):
    """Family/order pair not present in the embedded filter tables."""


class SignalTooShort(WavebandError):
    """Time axis too short for the requested decomposition level."""


class LengthMismatch(WavebandError):
    """Coefficient series lengths inconsistent with the recorded bookkeeping."""


class ShapeMismatch(WavebandError):
    """Array arguments disagree in shape."""


class StatsMismatch(WavebandError):
    """Normalization statistics do not match the tensor being denormalized."""


class DegenerateWindow(WavebandError):
    """Lookback window with (near) zero variance; flagged, not fatal."""


class EmptyTape(WavebandError):
    """Backward requested but no forward pass was recorded."""


class NonPositiveRatio(WavebandError):
    """Discrepancy ratio must be strictly positive."""


class BranchCountMismatch(WavebandError):
    """Modulation coefficient count differs from the branch count."""


class NonFiniteLoss(WavebandError):
    """Training loss became NaN or infinite."""


class MissingHorizon(WavebandError):
    """Report table requires all four prediction horizons."""


class CheckpointMismatch(WavebandError):
    """Checkpoint incompatible with the requested configuration."""
