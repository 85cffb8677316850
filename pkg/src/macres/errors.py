"""Exception types shared across the package."""


class MacresError(Exception):
    """Base class for all errors raised by macres."""


class ProbabilityError(MacresError, ValueError):
    """A weight vector is not a valid probability mass function."""


class AlphabetMismatch(MacresError, ValueError):
    pass


class AxisError(MacresError, ValueError):
    pass


class ZeroProbabilityError(MacresError, ValueError):
    pass


class BudgetExceeded(MacresError, RuntimeError):
    """Full enumeration would exceed the configured budget."""


class ChannelFormatError(MacresError, ValueError):
    pass


class PreconditionError(MacresError, ValueError):
    pass


class RateConditionError(PreconditionError):
    """Wiretap rate conditions fail; ``violated`` names the failing ones."""

    def __init__(self, message, violated=()):
        super().__init__(message)
        self.violated = tuple(violated)


class ReductionError(MacresError, RuntimeError):
    pass


class TheoremViolation(MacresError, AssertionError):
    """A proven inequality failed on a concrete instance.

    This always indicates a bug (or a numerical breakdown), never a
    property of the input.
    """
