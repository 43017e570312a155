"""Exception hierarchy shared by all divflow modules."""


class DivflowError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(DivflowError):
    """Operands disagree in parameter dimension p or matrix size N."""


class NotEllipticError(DivflowError):
    """A leading symbol term is singular somewhere on the sphere."""


class NotInvertibleError(DivflowError):
    """A symbol evaluation is singular; carries the offending point."""

    def __init__(self, message, mu=None):
        super().__init__(message)
        self.mu = mu


class InsufficientExpansionError(DivflowError):
    """An operation needs more asymptotic terms than the symbol stores."""


class NonConvergenceError(DivflowError):
    """A quadrature or limit procedure failed to reach its tolerance."""


class SpecError(DivflowError):
    """A family/config specification is malformed or violates its schema."""
