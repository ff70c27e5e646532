"""Exception types raised across symgauss."""


class SymgaussError(Exception):
    """Base class for library errors."""


class DomainError(SymgaussError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class QuadratureError(SymgaussError, RuntimeError):
    """A quadrature failed to reach its tolerance.

    ``achieved`` is the error estimate that was reached and ``where`` names
    the offending entry (e.g. a matrix index) when there is one.
    """

    def __init__(self, message, achieved=None, where=None):
        super().__init__(message)
        self.achieved = achieved
        self.where = where


class PrecisionError(SymgaussError, ArithmeticError):
    """Working precision is insufficient; retry with ``required_bits``."""

    def __init__(self, message, required_bits):
        super().__init__(message)
        self.required_bits = required_bits


class TuningError(SymgaussError, RuntimeError):
    """Metropolis step tuning could not bring acceptance into range."""

    def __init__(self, message, acceptance):
        super().__init__(message)
        self.acceptance = acceptance


class SolverError(SymgaussError, RuntimeError):
    """A nonlinear solve did not converge or produced an invalid field."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)
