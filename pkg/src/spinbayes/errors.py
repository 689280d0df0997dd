"""Exception types shared across the toolkit."""


class SpinbayesError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(SpinbayesError, ValueError):
    """A device or model parameter violates its physical constraints."""


class InvalidArgumentError(SpinbayesError, ValueError):
    """An operation argument is out of range or dimensionally inconsistent."""


class NumericalFailureError(SpinbayesError, ArithmeticError):
    """A numerical state became non-finite."""


class UnresolvedRelaxationError(SpinbayesError, RuntimeError):
    """Magnetization failed to settle into a stable state within the allowed time."""


class InvalidStateError(SpinbayesError, RuntimeError):
    """An object is used before it reached the required state (e.g. unprogrammed crossbar)."""


class DataFormatError(SpinbayesError, ValueError):
    """A data file does not match its declared binary format."""


class TrainingDivergenceError(SpinbayesError, RuntimeError):
    """The training loss became non-finite."""
