"""Routing-attack resilience for Tor: path inference, resilience scores, guard selection, BGP monitoring."""

from torbgp.errors import (
    ConflictError,
    DegenerateInputError,
    ParseError,
    SequencingError,
    TorBgpError,
    UnknownASError,
)

__version__ = "0.1.0"

__all__ = [
    "ConflictError",
    "DegenerateInputError",
    "ParseError",
    "SequencingError",
    "TorBgpError",
    "UnknownASError",
    "__version__",
]
