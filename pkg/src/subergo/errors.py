"""Semantic exception hierarchy shared by all subergo modules."""


class SubergoError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SubergoError):
    """An argument is outside the mathematical domain of the operation."""


class InvalidPhiError(SubergoError):
    """A drift modulus violates positivity, monotonicity or concavity."""


class NumericalError(SubergoError):
    """A quadrature or solver failed to reach the requested tolerance."""

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class RangeOverflowError(SubergoError):
    """An inverse transform left the representable range.

    ``largest`` records the largest argument value that was still attained.
    """

    def __init__(self, msg, largest=None):
        super().__init__(msg)
        self.largest = largest


class StructureError(SubergoError):
    """A kernel lacks required structure (irreducibility, aperiodicity)."""

    def __init__(self, msg, detail=None):
        super().__init__(msg)
        self.detail = detail


class RegimeError(SubergoError):
    """A geometric-regime modulus was passed where subgeometric is required."""


class PrecisionError(SubergoError):
    """A truncated series could not meet the requested tail accuracy."""

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class InapplicableError(SubergoError):
    """The operation does not apply to this input (e.g. bounded modulus)."""


class FitError(SubergoError):
    """A regression/fit could not be performed on the supplied curve."""


class ConfigError(SubergoError):
    """A configuration record is malformed or inconsistent."""
