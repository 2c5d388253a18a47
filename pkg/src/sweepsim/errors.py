"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class SweepError(Exception):
    """Base class for all library errors."""


class DimensionError(SweepError, ValueError):
    pass


class InfeasibleError(SweepError):
    """A state or initial condition lies outside its constraint set."""


class NumericalError(SweepError):
    """Non-finite values or a failed numerical routine."""


class ConvergenceError(NumericalError):
    """An iterative routine exhausted its budget.

    ``residual`` carries the last measured residual.
    """

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class NotMonotoneError(SweepError, ValueError):
    """Raised when an operation requires a positive monotonicity constant."""
