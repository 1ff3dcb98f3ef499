"""Exception hierarchy shared by every module."""

from __future__ import annotations


class KlinError(Exception):
    """Base class for all package errors."""


class DomainError(KlinError, ValueError):
    """An operation was applied to the wrong kind of algebraic domain."""


class ValidationError(KlinError, ValueError):
    """Malformed input: instance text, parameters or certificate contents."""


class ResourceCapError(KlinError, RuntimeError):
    """A configured size cap would be exceeded."""


class InconsistentError(KlinError):
    """Raised by the pseudo-expectation closure when two derivations disagree."""

    def __init__(self, message: str, witness=None) -> None:
        super().__init__(message)
        self.witness = witness
