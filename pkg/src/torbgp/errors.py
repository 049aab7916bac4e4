"""Exception types shared across the toolkit."""

from __future__ import annotations


class TorBgpError(Exception):
    """Base class for every error raised by torbgp."""


class ParseError(TorBgpError, ValueError):
    """Malformed input line. ``lineno`` is 1-based, or None when unknown."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ConflictError(TorBgpError, ValueError):
    """Two inputs disagree (e.g. one AS pair listed with two relations)."""


class UnknownASError(TorBgpError, KeyError):
    def __init__(self, asn):
        self.asn = asn
        super().__init__(f"AS{asn} is not in the graph")

    def __str__(self) -> str:
        return self.args[0]


class DegenerateInputError(TorBgpError, ValueError):
    """Input is well-formed but leaves nothing to compute (zero weight, empty set)."""


class SequencingError(TorBgpError, ValueError):
    """BGP updates arrived out of timestamp order beyond the allowed tolerance."""
