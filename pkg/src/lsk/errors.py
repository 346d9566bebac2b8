"""Shared exception types.

The CLI maps these onto exit codes: ``ValidationError`` -> 1,
``ParseError`` and I/O failures -> 2.
"""


class LskError(Exception):
    """Base class for all package errors."""


class ParseError(LskError):
    """A file could not be parsed (malformed container or schema)."""


class ValidationError(LskError):
    """Parsed or constructed data violates a domain invariant."""
