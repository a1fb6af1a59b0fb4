"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: invalid input or parameters exit with 2,
numerical failures with 3.
"""


class EbgpError(Exception):
    """Base class for all package errors."""


class InvalidInputError(EbgpError):
    """Malformed or inconsistent data passed to an operation."""


class InvalidParameterError(EbgpError):
    """A parameter value outside its admissible range."""


class NumericalFailureError(EbgpError):
    """A numerical routine failed beyond recovery.

    Carries the escalation trail (e.g. attempted jitter levels) so callers
    can report what was tried.
    """

    def __init__(self, message, attempts=None):
        super().__init__(message)
        self.attempts = tuple(attempts) if attempts is not None else ()
