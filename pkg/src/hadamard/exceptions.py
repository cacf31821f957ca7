"""Exception types raised across the package."""


class HadamardError(Exception):
    """Base class for errors raised by this package."""


class GeometryDomainError(HadamardError, ValueError):
    """An argument lies outside the domain of a geometric operation."""


class UnsupportedGeometryError(HadamardError, ValueError):
    """The requested geometry is outside the Hadamard (nonpositive curvature) setting."""


class NumericError(HadamardError, FloatingPointError):
    """A non-finite value appeared inside an iterative solver."""


class SubsolverBudgetError(HadamardError, RuntimeError):
    """An inner solver ran out of iterations before meeting its stopping rule.

    Attributes
    ----------
    point : ndarray or tuple
        Best iterate reached before the budget ran out.
    certificate : float
        Best certificate value achieved (``inf`` if none was available).
    report : SubsolverReport
        Iteration and oracle-call accounting at the time of failure.
    """

    def __init__(self, message, point=None, certificate=float("inf"), report=None):
        super().__init__(message)
        self.point = point
        self.certificate = certificate
        self.report = report
