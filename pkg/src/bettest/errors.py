"""Exception hierarchy shared by every module.

Validation problems derive from ``ValueError`` so callers that only care
about bad input can catch the builtin; numerical failures derive from
``ArithmeticError``.
"""


class BettingError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(BettingError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidBetError(BettingError, ValueError):
    """A payoff is negative somewhere or cannot be priced at 1."""


class AbsoluteContinuityError(InvalidBetError):
    """The alternative puts mass where the null has none."""


class CalibrationError(BettingError, ValueError):
    """A calibrated payoff has null expectation above 1."""


class ProtocolViolation(BettingError, ValueError):
    """Skeptic's move breaks the rules of the testing protocol."""

    def __init__(self, message, round_index=None, theta=None):
        super().__init__(message)
        self.round_index = round_index
        self.theta = theta


class InconsistentDataError(BettingError, ValueError):
    """Observations cannot have come from the assumed protocol."""


class NumericError(BettingError, ArithmeticError):
    """Quadrature or root finding failed to reach the requested accuracy."""
