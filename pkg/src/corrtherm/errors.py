"""Exception hierarchy shared across the package."""


class CorrthermError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidStateError(CorrthermError, ValueError):
    """A probability vector or level structure violates its invariants."""


class SpectrumCapError(CorrthermError):
    """Building a composite spectrum would exceed the configured level cap."""


class DimensionCapError(CorrthermError):
    """A joint solve would exceed the configured dimension cap."""


class InfeasibleError(CorrthermError):
    """A constrained solve has an empty feasible region."""


class ConstraintViolationError(CorrthermError, ValueError):
    """Supplied joint occupations do not reproduce the required marginals."""


class MajorizationError(CorrthermError):
    """Internal inconsistency detected in a majorization feasibility search."""


class AccuracyError(CorrthermError):
    """A numeric solve finished but failed its residual checks."""
