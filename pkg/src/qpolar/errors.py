"""Exception types shared across the package."""

from __future__ import annotations


class QPolarError(Exception):
    """Base class for every error raised by qpolar."""


class SizeError(QPolarError, ValueError):
    """Operand dimensions do not match, or a size bound is exceeded."""


class DomainError(QPolarError, ValueError):
    """A probability or index lies outside its admissible range."""


class DegenerateCodeError(QPolarError, ValueError):
    """A construction would produce k = 0 or k = N."""

    def __init__(self, message: str, k: int, N: int):
        super().__init__(message)
        self.k = k
        self.N = N


class ResourceError(QPolarError, RuntimeError):
    """A table or enumeration would exceed its memory/time budget."""
