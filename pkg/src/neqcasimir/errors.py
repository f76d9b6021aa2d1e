"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`NeqCasimirError`, so batch drivers can catch one type and map it to an
exit code.
"""


class NeqCasimirError(Exception):
    """Base class for package errors."""


class DomainError(NeqCasimirError, ValueError):
    """An argument lies outside the domain of an operation."""


class DegenerateModeError(DomainError):
    """A mode is degenerate (k_perp = 0 azimuth, grazing incidence, ...)."""


class RangeError(DomainError):
    """A frequency lies outside the sampled range of tabulated data."""


class UnsupportedModelError(NeqCasimirError):
    """The requested evaluation is not available for this model."""


class StructuralError(NeqCasimirError):
    """Malformed input: wrong dimensions, missing partners, bad files."""


class ConfigError(NeqCasimirError):
    """Invalid run configuration. ``problems`` lists every failure found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class AccuracyError(NeqCasimirError):
    """A quadrature or summation failed to reach the requested tolerance.

    The best available estimate is kept in ``partial`` (value) and ``error``.
    """

    def __init__(self, message, partial=None, error=None):
        super().__init__(message)
        self.partial = partial
        self.error = error


class ResonanceError(NeqCasimirError):
    """``1 - S1 S2`` is singular or too ill-conditioned to invert."""

    def __init__(self, message, omega=None, condition=None):
        super().__init__(message)
        self.omega = omega
        self.condition = condition
