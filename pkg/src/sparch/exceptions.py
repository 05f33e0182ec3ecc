"""Exception hierarchy for the sparch package.

Configuration and input problems raise :class:`UsageError` subclasses;
failures of the numerics themselves (singular systems, violated process
constraints, non-finite objectives) raise :class:`NumericalError`
subclasses.  The CLI maps the former to exit code 1 and the latter to
exit code 2.
"""

from __future__ import annotations

__all__ = [
    "SpArchError",
    "UsageError",
    "InvalidDomainError",
    "InvalidWeightsError",
    "InvalidModelError",
    "InvalidParameterError",
    "DegenerateInputError",
    "NumericalError",
    "SingularSystemError",
    "NonnegativityViolationError",
    "InvalidPointError",
]


class SpArchError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(SpArchError):
    """A caller supplied inconsistent or malformed inputs."""


class InvalidDomainError(UsageError):
    """Locations are malformed: wrong shape, duplicates, or a bad metric."""


class InvalidWeightsError(UsageError):
    """A weights matrix violates its contract (negative entry, nonzero
    diagonal, shape mismatch, non-finite values)."""


class InvalidModelError(UsageError):
    """A process specification is inconsistent (negative alpha, size
    mismatch between alpha, weights, and error distribution)."""


class InvalidParameterError(UsageError):
    """A parameter value is outside its admissible range."""


class DegenerateInputError(UsageError):
    """An input is degenerate for the requested statistic, for example a
    constant vector handed to Moran's I or an all-zero weights matrix."""


class NumericalError(SpArchError):
    """A numerical procedure failed at runtime."""


class SingularSystemError(NumericalError):
    """A linear system required by the solver is singular."""


class NonnegativityViolationError(NumericalError):
    """A solved vector of squared observations has a genuinely negative
    component, so the model admits no real-valued realization for the
    drawn innovations."""


class InvalidPointError(NumericalError):
    """A density or likelihood was requested at a point where it is not
    defined (singular Jacobian, observation outside the support)."""
