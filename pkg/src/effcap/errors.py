"""Exception hierarchy shared by every module of the package."""


class EffcapError(Exception):
    """Base class for all package errors."""


class InvalidMatrix(EffcapError, ValueError):
    """Matrix is not stochastic, has negative entries, or is reducible/periodic."""


class InvalidParameter(EffcapError, ValueError):
    """A scalar or vector argument violates its documented domain."""


class NonConvergent(EffcapError, ArithmeticError):
    """Power iteration hit its iteration cap."""


class DegenerateEstimate(EffcapError, ArithmeticError):
    """Monte Carlo MGF estimate is dominated by a handful of sample paths."""

    def __init__(self, message, effective_samples=None):
        super().__init__(message)
        self.effective_samples = effective_samples


class Unstable(EffcapError, ValueError):
    """Queue arrival rate is not below the mean service rate."""


class InsufficientTail(EffcapError, ArithmeticError):
    """Too few thresholds fall inside the tail-fit window."""
