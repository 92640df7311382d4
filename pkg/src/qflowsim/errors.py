"""Exception types shared across the package."""


class QflowError(Exception):
    """Base class for package-specific failures."""


class ConvergenceError(QflowError):
    """An iterative solver failed to converge.

    Carries the iteration trace accumulated up to the failure so callers
    can inspect or report it.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class IllConditionedBasisError(QflowError):
    """The AO overlap matrix is (numerically) linearly dependent."""


class ResourceLimitError(QflowError):
    """A requested dense problem exceeds the configured size limit."""


class NumericalIntegrityError(QflowError):
    """An internal consistency check (Hermiticity, norm drift) failed."""


class FcidumpParseError(QflowError):
    """Malformed FCIDUMP input."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
