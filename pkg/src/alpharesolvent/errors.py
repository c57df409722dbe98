"""Exception hierarchy shared by every module.

The CLI maps ``ValidationError`` to exit code 2 and ``NumericalEnvelopeError``
(and its subclasses) to exit code 3.
"""


class AlphaResolventError(Exception):
    """Base class for all package errors."""


class ValidationError(AlphaResolventError, ValueError):
    """Input violates a documented precondition."""


class GridError(ValidationError):
    """Grid is malformed, too coarse, or does not match another grid."""


class NumericalEnvelopeError(AlphaResolventError, ArithmeticError):
    """A computation left the range where its accuracy is validated."""


class DomainError(NumericalEnvelopeError):
    """Mittag-Leffler argument outside the validated accuracy envelope."""


class MLOverflowError(NumericalEnvelopeError, OverflowError):
    """Result magnitude exceeds the representable double range."""


class ConditioningError(NumericalEnvelopeError):
    """Both the spectral and the power-series matrix routes failed."""


class StepSolveError(NumericalEnvelopeError):
    """Implicit Volterra step matrix is singular."""
