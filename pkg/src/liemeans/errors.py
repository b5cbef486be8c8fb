"""Exception types raised across the package."""

from __future__ import annotations

from typing import Sequence


class LieMeansError(Exception):
    """Base class for all package errors."""


class DomainError(LieMeansError, ValueError):
    """A group element lies outside the principal-log chart (or a series safeguard failed).

    ``indices`` lists the offending sample positions when the failure came from
    a batch evaluation, so callers can report which samples broke the chart.
    """

    def __init__(self, message: str, indices: Sequence[int] | None = None):
        super().__init__(message)
        self.indices = [int(i) for i in indices] if indices is not None else []


class NonConvergence(LieMeansError, RuntimeError):
    """An iterative solver ran out of iterations.

    ``best`` carries the best iterate found and ``residual`` its residual.
    """

    def __init__(self, message: str, best=None, residual: float = float("nan")):
        super().__init__(message)
        self.best = best
        self.residual = residual


class SingularInput(LieMeansError, ValueError):
    """A matrix that must be invertible is numerically singular."""


class NearZeroSum(LieMeansError, ValueError):
    """The weighted quaternion sum is too close to the origin to normalize."""


class SingularCovariance(LieMeansError, ValueError):
    """A covariance matrix that must be inverted is singular."""


class GroupMismatch(LieMeansError, ValueError):
    """Operands belong to different groups."""


class MembershipError(LieMeansError, ValueError):
    """A matrix fails the membership predicate of its group."""
