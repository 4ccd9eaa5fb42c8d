"""Exception hierarchy shared by the library and the CLI."""


class DimeError(Exception):
    """Base class for every error raised by this package."""


class RejectedInputError(DimeError, ValueError):
    """An argument violates the precondition of the operation it was passed to."""


class NumericalError(DimeError, ArithmeticError):
    """A computation produced a numerically invalid result.

    ``iteration`` is filled in by the experiment harness so a failure deep in a
    long run can be located.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class PSDViolationError(NumericalError):
    """A Gram matrix has an eigenvalue clearly below zero."""


class SolverError(NumericalError):
    """The symmetric eigensolver failed to converge."""


class OptimizerDivergenceError(NumericalError):
    """Bandwidth optimization produced a non-finite gradient or parameter."""


class DegenerateAnchorError(NumericalError):
    """Relative normalization was asked to divide by a (near) zero anchor mean."""
