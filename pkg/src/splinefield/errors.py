"""Exception types shared across the package."""


class SplineFieldError(Exception):
    """Base class for all package errors."""


class DomainError(SplineFieldError, ValueError):
    """An argument is outside the operation's valid domain."""


class DegenerateInputError(DomainError):
    """Input is formally valid but carries no usable information."""


class UnderdeterminedError(SplineFieldError, ValueError):
    """Fewer samples than free parameters."""


class RankDeficiencyError(SplineFieldError, ValueError):
    """The unregularized design matrix does not have full column rank."""


class FormatError(SplineFieldError, ValueError):
    """A file or message does not match its documented schema."""


class VersionError(FormatError):
    """A persisted model uses an unsupported format version."""


class IntegrationError(SplineFieldError, RuntimeError):
    """The integrator produced a non-finite state."""


class DivergenceError(IntegrationError):
    """A rollout left the guarded region around the field.

    Carries the partial trace so the caller can inspect what happened.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
