"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid arguments: wrong dimension, out-of-range parameter, empty sample."""


class DomainError(InputError):
    pass


class RangeError(InputError):
    pass


class NumericalFailure(RuntimeError):
    """An iterative method failed to meet its tolerance.

    ``best`` holds whatever partial answer the method had (for the conjugate,
    the best lower bound found).
    """

    def __init__(self, message, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace


class SearchFailure(NumericalFailure):
    pass


class NonConvergence(NumericalFailure):
    pass


class BoundaryTrap(NumericalFailure):
    pass


class HypothesisFailure(RuntimeError):
    """Raised when a solve is refused because hypothesis checks failed."""

    def __init__(self, message, reports):
        super().__init__(message)
        self.reports = reports
