"""Exception hierarchy shared by every module of the package."""


class QsDistillError(Exception):
    """Base class for all package errors."""


class ValidationError(QsDistillError, ValueError):
    """An input failed a structural or numerical validity check."""


class NotPSDError(ValidationError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class DomainError(QsDistillError, ValueError):
    """A scalar argument lies outside the domain of the operation."""


class ProtocolFailure(QsDistillError, RuntimeError):
    """The accepted measurement outcomes have vanishing total probability."""


class IntegrationQualityError(QsDistillError, RuntimeError):
    """The fixed-step integrator drifted beyond its quality tolerances."""


class CrossCheckError(QsDistillError, RuntimeError):
    """A closed-form value disagrees with its simulated counterpart."""
