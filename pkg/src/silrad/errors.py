"""Exception types raised across the package.

Parse errors carry enough location information (byte offset within the
record, line number within the source) to point at the offending input.
"""

from __future__ import annotations


class SilradError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SilradError):
    """A record could not be converted into a canonical event."""

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        self.offset = offset
        self.line = line
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte offset {offset}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)


class MalformedXml(ParseError):
    pass


class MalformedJson(ParseError):
    pass


class MissingEventId(ParseError):
    pass


class MissingTimestamp(ParseError):
    pass


class DuplicateField(ParseError):
    pass


class UnknownSourceTag(SilradError):
    """An event's source tag has no entry in the label manifest."""


class EmptyWord(SilradError):
    pass


class EmptyCorpus(SilradError):
    pass


class UnknownContextWord(SilradError):
    pass


class NonFiniteInput(SilradError):
    """NaN or infinity fed to an operation that requires finite values."""


class DimensionMismatch(SilradError):
    pass


class ZeroLength(SilradError):
    pass


class InvalidDelta(SilradError):
    pass


class BadSplit(SilradError):
    pass


class EmptyTrainSet(SilradError):
    pass


class StreamTooShort(SilradError):
    pass


class MissingSegment(SilradError):
    pass


class EmptySegment(SilradError):
    pass


class BadParameter(SilradError):
    pass


class BadConfig(SilradError):
    pass


class ConfigError(SilradError):
    """Invalid run configuration (CLI exit code 1)."""


class DataError(SilradError):
    """Unreadable or inconsistent input data (CLI exit code 2)."""
