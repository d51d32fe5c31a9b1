"""Exception types shared across the package."""

from __future__ import annotations


class PathParamError(Exception):
    """Base class for errors raised by this package."""


class InfeasibleTargetError(PathParamError):
    """A boundary-state planning problem has no solution within the limits.

    Attributes:
        residual: Best-effort measure of how far the request is from a
            feasible one (units depend on the failing quantity).
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class StallError(PathParamError):
    """A traversal stopped making progress before reaching the final waypoint."""


class SearchContradictionError(PathParamError):
    """A search invariant that must hold by construction was violated.

    Raised for example when a zero target acceleration is rejected by the
    validity predicate, which contradicts the fact that a standstill approach
    is always possible.
    """


class DegeneratePathError(PathParamError, ValueError):
    """A path carries no usable geometry (for example, all samples equal)."""


class FormatError(PathParamError, ValueError):
    """An input file could not be parsed; the message names file and field."""
