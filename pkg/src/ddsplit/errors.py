"""Exception hierarchy shared across the package."""


class DDSplitError(Exception):
    """Base class for all package errors."""


class GridError(DDSplitError, ValueError):
    pass


class EllipticityError(DDSplitError, ValueError):
    """Diffusion coefficient is not bounded away from zero."""


class PartitionError(DDSplitError, ValueError):
    pass


class SolverError(DDSplitError):
    pass


class SingularSystem(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class NewtonFailed(SolverError):
    pass


class StepRestrictionViolated(DDSplitError):
    pass


class Diverged(DDSplitError):
    pass


class TooLargeForDense(DDSplitError, ValueError):
    pass


class AccuracyNotReached(DDSplitError):
    pass


class DegenerateErrors(DDSplitError, ValueError):
    pass


class ParseError(DDSplitError):
    pass


class ValidationError(DDSplitError, ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
