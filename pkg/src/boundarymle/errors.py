"""Exception types raised by the fitting, completion, and inference code."""


class BoundaryMleError(Exception):
    """Base class for all package errors."""


class RankError(BoundaryMleError):
    """Model matrix is rank deficient or too ill-conditioned to trust."""


class ParseError(BoundaryMleError):
    """A data file could not be parsed into a model."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NotSymmetric(BoundaryMleError):
    """Matrix handed to the symmetric eigensolver is not symmetric."""


class SingularStep(BoundaryMleError):
    """Newton system unsolvable even after diagonal inflation."""


class ZeroDirection(BoundaryMleError):
    """A candidate direction of recession is numerically zero."""


class NoDescentDirection(BoundaryMleError):
    """The minimax problem over the null basis admits no useful direction.

    Usually means the estimated null space is spurious (eigenvalue cutoff
    too large).
    """


class IterationLimit(BoundaryMleError):
    """Completion iteration exceeded the dimension bound."""


class SolverFailure(BoundaryMleError):
    """Constrained interval solver could not produce a feasible optimum."""


class NonBoundaryTarget(BoundaryMleError):
    """Interval requested for a parameter that is estimable in the LCM.

    Such parameters get conventional two-sided intervals, which are out of
    scope here.
    """


class TooLarge(BoundaryMleError):
    """Brute-force enumeration would exceed its size budget."""
