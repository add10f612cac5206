"""Exception types raised across the package.

Everything user-facing derives from :class:`PcqError` so callers (and the
CLI) can distinguish data problems from programming errors.
"""

from __future__ import annotations


class PcqError(Exception):
    """Base class for all errors raised by this package."""


class EmptySetError(PcqError):
    """An operation that needs at least one point received none."""


class NonFiniteInputError(PcqError):
    """An input array contained NaN or infinity where finite values are required."""


class ParseError(PcqError):
    """A text input (frame file or scenario script) is malformed.

    Carries the 1-based line number when one is known.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class RangeError(PcqError):
    """A parsed value is outside its legal range (negative range, intensity beyond scale)."""


class FormatError(PcqError):
    """A binary frame has a bad magic number or unsupported version."""


class TruncationError(PcqError):
    """A binary frame payload does not match the size its header promises."""


class EmptyDatasetError(PcqError):
    """A dataset directory holds no frame files."""


class DuplicateFrameIdError(PcqError):
    """Two frame files in one dataset claim the same frame id."""
