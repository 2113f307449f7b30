"""Exception hierarchy shared across the package.

Validation problems (bad configs, out-of-domain arguments) and numerical
failures (quadrature that cannot reach tolerance, near-singular solves)
are kept distinct so the CLI can map them to different exit codes.
"""


class PlasmonQIError(Exception):
    """Base class for all package errors."""


class ValidationError(PlasmonQIError):
    """A config value or argument violates a documented invariant."""


class DomainError(ValidationError):
    """Argument outside the documented domain of an operation."""


class SingularityError(DomainError):
    """Evaluation requested exactly at a singular point (e.g. H_n at 0)."""


class NumericalError(PlasmonQIError):
    """A numerical procedure failed to meet its accuracy contract."""


class QuadratureError(NumericalError):
    """Adaptive quadrature stopped before reaching the requested tolerance."""

    def __init__(self, message, achieved=None, requested=None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class NearSingularSystemError(NumericalError):
    """Boundary-condition solve hit an ill-conditioned linear system."""


class BracketingError(NumericalError):
    """Root bracketing failed; carries diagnostic samples."""

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples
