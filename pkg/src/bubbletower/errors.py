"""Exception hierarchy shared by all modules."""


class BubbleTowerError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BubbleTowerError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class OutOfRange(BubbleTowerError, ValueError):
    """A radius or index lies outside the range covered by a profile."""


class NonConvergence(BubbleTowerError, ArithmeticError):
    """The adaptive integrator could not keep its step above the floor."""


class StopNotReached(BubbleTowerError, ArithmeticError):
    """Integration hit the radius ceiling before the stop rule fired."""


class AmbiguousEvent(BubbleTowerError, ArithmeticError):
    """Two events collapsed inside one tolerance window."""


class QuadratureFailure(BubbleTowerError, ArithmeticError):
    """A quadrature did not reach its requested accuracy."""


class DegenerateFit(BubbleTowerError, ValueError):
    """A log-log fit was requested on non-positive or too few values."""


class AccelerationUnstable(BubbleTowerError, ArithmeticError):
    """Aitken acceleration hit a vanishing second difference."""


class SweepAborted(BubbleTowerError, RuntimeError):
    """An epsilon sweep could not construct the solution at some point."""
