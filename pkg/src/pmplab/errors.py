"""Exception types shared by every module."""


class PmpError(Exception):
    """Base class for all errors raised by pmplab."""


class DomainMismatchError(PmpError, ValueError):
    """Objects from different atom spaces were combined."""


class InvalidInputError(PmpError, ValueError):
    """A constructor argument violates a structural invariant."""


class ResourceError(PmpError):
    """An exhaustive computation would exceed a configured cap."""

    def __init__(self, message, required=None, cap=None):
        super().__init__(message)
        self.required = required
        self.cap = cap


class PreconditionError(PmpError):
    """An operation's precondition does not hold.

    ``witness`` carries a JSON-friendly description of the violation.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness if witness is not None else {}


class InvariantViolation(PmpError, AssertionError):
    """An internal postcondition failed; indicates corrupted input or a bug."""


class ParseError(PmpError, ValueError):
    """A document or formula could not be parsed.  ``location`` names the field."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.message = message
        self.location = location
