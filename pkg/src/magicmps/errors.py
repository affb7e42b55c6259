"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific type that applies rather than bare ValueError.
"""

from __future__ import annotations


class MagicMpsError(Exception):
    """Base class for all package-specific errors."""


class ParseError(MagicMpsError):
    """Malformed input: bad descriptor strings, config files, MPS files."""


class PreconditionError(MagicMpsError):
    """An operation was called outside its domain.

    Examples: tensors with the wrong shape, an unnormalised state passed to
    an engine that requires normalisation, a boundary condition that does
    not match the state kind, a bond dimension above a hard cap.
    """


class ConvergenceError(MagicMpsError):
    """An iterative solver failed to reach its tolerance within budget."""

    def __init__(self, message: str, iterations: int | None = None):
        super().__init__(message)
        self.iterations = iterations


class NoClosedFormError(PreconditionError):
    """Requested a closed-form value outside the catalogue of known cases."""
