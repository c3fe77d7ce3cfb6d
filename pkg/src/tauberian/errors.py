"""Exception hierarchy shared by all modules."""


class TauberianError(Exception):
    """Base class for library errors."""


class DomainError(TauberianError, ValueError):
    """Argument outside the domain of an operation."""


class AccuracyError(TauberianError):
    """A numerical procedure could not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class NumericError(TauberianError):
    """Ill-conditioned or failed linear algebra."""


class AmbiguityError(TauberianError):
    """Two singularity models explain the data about equally well."""

    def __init__(self, message, best=None, runner_up=None):
        super().__init__(message)
        self.best = best
        self.runner_up = runner_up


class InvariantError(TauberianError):
    """A structural invariant (sign rule, positivity) is violated."""


class InstabilityError(TauberianError):
    """Queueing model with load >= 1."""


class SingularityError(TauberianError):
    """Evaluation hit a zero of a denominator."""
