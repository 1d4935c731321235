"""Exception hierarchy for the OTFS radar simulator."""


class OtfsRadarError(Exception):
    """Base class for all library errors."""


class ConfigError(OtfsRadarError, ValueError):
    """Invalid configuration value or experiment description.

    ``line`` is the 1-based line in the source file when known.
    """

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None and line is not None:
            where = f"{source}:{line}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class NonIntegerTapError(OtfsRadarError, ValueError):
    """A target does not fall on the integer delay-Doppler grid."""


class OutOfAmbiguityRangeError(OtfsRadarError, ValueError):
    """A target lies outside the unambiguous range/velocity region."""


class DelayExceedsCpError(OtfsRadarError, ValueError):
    """A channel delay tap is longer than the cyclic prefix."""


class DimensionMismatchError(OtfsRadarError, ValueError):
    """Array shape does not agree with the configured grid."""


class GridTooLargeError(OtfsRadarError, MemoryError):
    """Refusing to materialize an (MN x MN) matrix above the size cap."""


class DegenerateGridError(OtfsRadarError, ValueError):
    """Metric undefined on a grid with fewer than two bins."""
