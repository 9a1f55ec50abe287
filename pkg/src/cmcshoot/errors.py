"""Exception hierarchy shared by all modules."""


class CMCError(Exception):
    """Base class for every error raised by this package."""

    kind = "error"


class SingularCoordinateError(CMCError, ArithmeticError):
    """A denominator of the reduced equations vanished (sin r, cos theta, ...)."""

    kind = "singular-coordinate"


class DomainError(CMCError, ValueError):
    """Input lies outside the domain of a coordinate map or formula."""

    kind = "domain"


class DimensionError(CMCError, ValueError):
    kind = "dimension"


class InvalidParameters(CMCError, ValueError):
    """Parameters violate their invariants (n < 2, lambda <= 0, bad tolerances)."""

    kind = "invalid-config"


class StepUnderflow(CMCError):
    kind = "step-underflow"


class BracketNotFound(CMCError):
    kind = "bracket-not-found"


class NonConvergence(CMCError):
    kind = "non-convergence"

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class InconsistentClassification(NonConvergence):
    kind = "inconsistent-classification"


class AssemblyError(CMCError):
    """The arc cannot be closed up into a generating curve."""

    kind = "assembly"


class MonitorViolation(CMCError):
    """A bound monitor failed while running under the strict flag."""

    kind = "monitor-violation"
