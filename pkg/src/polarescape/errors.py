"""Exception types shared across the package."""


class PolarEscapeError(Exception):
    """Base class for all package errors."""


class BudgetExceeded(PolarEscapeError, RuntimeError):
    """An enumeration would visit more nodes or values than the configured cap."""

    def __init__(self, what, needed, cap):
        self.what = what
        self.needed = needed
        self.cap = cap
        super().__init__(f"{what}: needs {needed} > cap {cap}")


class DomainError(PolarEscapeError, ValueError):
    """Argument outside the domain of a map or derivative."""


class NumericalError(PolarEscapeError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy value."""


class TooFewPoints(PolarEscapeError, ValueError):
    """Not enough data points for a fit or test."""


class SplitNotContiguous(PolarEscapeError, ValueError):
    """The two inverse-image pieces of a target interval do not overlap."""
