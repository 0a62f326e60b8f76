"""Shared exception types.

Everything user-facing raises one of these two, so the CLI can map
domain errors to exit code 1 and malformed input files to helpful
messages with line numbers.
"""

from __future__ import annotations

__all__ = ["ValidationError", "ParseError"]


class ValidationError(ValueError):
    """A value or combination of values violates a documented contract."""


class ParseError(ValueError):
    """An input file could not be parsed.

    Carries an optional 1-based line number so messages can point at the
    offending row of a CSV or config file.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
