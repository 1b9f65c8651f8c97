"""
Exception hierarchy for the lonely-passenger toolkit.

The CLI maps these onto exit codes; library callers catch them directly.
"""


class LonelyPassengerError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidParameterError(LonelyPassengerError, ValueError):
    """A numeric argument is outside the operation's domain."""


class InvalidStateError(InvalidParameterError):
    """A (time, nonempty, lonely) triple that no configuration can produce."""


class InvalidPathError(InvalidParameterError):
    """A sequence that is not a valid path of the chain it is passed to."""


class NullConditioningError(LonelyPassengerError):
    """Conditioning on an event of probability zero."""


class DistributionError(LonelyPassengerError, ValueError):
    """Masses are negative or do not sum to exactly one."""


class DenominatorError(LonelyPassengerError, AssertionError):
    """A probability does not have the denominator its sample space forces."""


class SizeLimitExceeded(LonelyPassengerError):
    """An enumeration would exceed the configured configuration limit."""

    def __init__(self, size: int, limit: int):
        super().__init__(f"enumeration of {size} configurations exceeds limit {limit}")
        self.size = size
        self.limit = limit


class UnknownPredicateError(LonelyPassengerError, KeyError):
    """A pathwise predicate name outside the catalog."""


class UnknownFunctionalError(LonelyPassengerError, KeyError):
    """A configuration functional outside the permutation-symmetric catalog."""


class CouplingInvariantError(LonelyPassengerError):
    """A coupling construction produced a state its proof rules out."""
