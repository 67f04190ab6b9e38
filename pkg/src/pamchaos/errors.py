"""Exception types raised across the package."""


class PamError(Exception):
    """Base class for every error raised by pamchaos."""


class ValidationError(PamError, ValueError):
    """Input parameters are outside the supported domain."""


class OutOfRange(ValidationError):
    pass


class EmptyDimension(ValidationError):
    pass


class TimeRoughness(ValidationError):
    """Time Hurst exponent below 1/2; this regime is not supported."""


class DimensionMismatch(ValidationError):
    pass


class PreconditionError(PamError, ValueError):
    pass


class NumericalError(PamError, ArithmeticError):
    """A numerical routine could not produce a trustworthy value."""


class ToleranceNotMet(NumericalError):
    pass


class NonIntegrable(NumericalError):
    pass


class NonIntegrableEndpoint(NonIntegrable):
    pass


class DegenerateTimes(PamError, ValueError):
    pass


class NonpositiveTime(PamError, ValueError):
    pass


class DomainOrder(PamError, ValueError):
    pass


class InsufficientRegularity(PamError, ValueError):
    """The sufficient solvability condition fails, so a bound is vacuous."""


class EmbeddingNotPSD(NumericalError):
    pass


class SizeLimit(PamError, ValueError):
    pass


class GridMismatch(PamError, ValueError):
    pass


class Unstable(NumericalError):
    pass


class InvalidSpec(PamError, ValueError):
    pass
