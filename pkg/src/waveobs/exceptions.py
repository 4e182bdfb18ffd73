class WaveObsError(Exception):
    """Base class for all errors raised by waveobs."""


class DimensionError(WaveObsError, ValueError):
    """Array shapes or index ranges are inconsistent with the system."""


class ConfigError(WaveObsError, ValueError):
    """An experiment configuration could not be parsed or validated."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class RecordError(WaveObsError, ValueError):
    """A run record file is truncated or malformed."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class EmptyTemplateError(WaveObsError, ValueError):
    """A gain template has no entries it is allowed to set."""


class UnknownProfileError(WaveObsError, ValueError):
    """A source profile name is not in the supported set."""


class CFLWarning(UserWarning):
    """The explicit wave update is run at or beyond its stability limit."""
