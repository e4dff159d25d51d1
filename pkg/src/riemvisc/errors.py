"""Exception types shared across the package."""


class RiemviscError(Exception):
    """Base class for package errors."""


class GeometryDomainError(RiemviscError, ValueError):
    """Operation evaluated outside its geometric domain (cut locus, chart, ...)."""


class BasePointMismatchError(RiemviscError, ValueError):
    """Tangent objects attached to different base points were combined."""


class DegenerateSegmentError(RiemviscError, ValueError):
    """A geodesic segment was requested between coincident endpoints."""


class SingularBVPError(RiemviscError, RuntimeError):
    """Jacobi boundary value problem is singular (conjugate endpoints)."""


class UnsupportedModelError(RiemviscError, ValueError):
    """The requested operation does not support this manifold model."""


class PreconditionError(RiemviscError, ValueError):
    """A documented precondition of an operation was violated."""


class DivergenceError(RiemviscError, RuntimeError):
    """Fixed-point iteration diverged; carries the partial solve report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
