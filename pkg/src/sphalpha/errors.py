"""Exception hierarchy shared across the package."""


class SphalphaError(Exception):
    """Base class for all errors raised by this package."""


class ZeroVector(SphalphaError, ValueError):
    pass


class OutsideHemisphere(SphalphaError, ValueError):
    pass


class AntipodalPoints(SphalphaError, ValueError):
    pass


class ZeroProjection(SphalphaError, ValueError):
    pass


class NotUnitNorm(SphalphaError, ValueError):
    pass


class OutsideSupport(SphalphaError, ValueError):
    """The query point has zero density, so log-density and transport are undefined."""


class EmptyModel(SphalphaError, ValueError):
    pass


class BelowThreshold(SphalphaError, ValueError):
    pass


class DomainError(SphalphaError, ValueError):
    pass


class SolverFailure(SphalphaError, RuntimeError):
    def __init__(self, message, simplex=None):
        super().__init__(message)
        self.simplex = simplex


class ResolutionTooCoarse(SphalphaError, ValueError):
    pass


class DimensionOutOfRange(SphalphaError, ValueError):
    pass


class InsufficientDimension(SphalphaError, ValueError):
    pass


class EmptyGraph(SphalphaError, ValueError):
    pass


class AllRowsZero(SphalphaError, ValueError):
    pass


class FormatError(SphalphaError, ValueError):
    """Input file does not match one of the documented matrix formats."""


class StageError(SphalphaError):
    """Wraps a module error with the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class RankDeficient(UserWarning):
    """Requested SVD rank exceeds the numerical rank of the data."""


class DegenerateColumn(UserWarning):
    """A constant column was mapped to zeros during z-scoring."""


class DroppedRows(UserWarning):
    """Zero rows were removed before normalising to the sphere."""
