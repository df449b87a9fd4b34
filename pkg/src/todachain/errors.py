"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class TodaError(Exception):
    """Base class for all errors raised by :mod:`todachain`."""


class DomainViolation(TodaError):
    """A stencil or evaluation point lies outside a field's domain."""


class NonPositiveField(DomainViolation):
    """A field that must be positive (``u`` under a logarithm) is not."""


class NonFinite(TodaError):
    """A field or function returned NaN or infinity."""


class NoBracket(TodaError):
    """The supplied bracket does not contain a sign change."""


class NoConvergence(TodaError):
    """An iterative solver hit its iteration cap."""


class SingularJacobian(TodaError):
    """A Newton Jacobian is numerically singular."""


class CausticSingular(SingularJacobian):
    """The implicit function theorem fails at the root (caustic)."""


class TooFewSamples(TodaError):
    """Not enough samples for the requested quadrature."""


class AllPointsSkipped(TodaError):
    """Every grid point was excluded by the domain predicate."""


class ZeroResidual(TodaError):
    """Residuals are below the noise floor, so no order can be estimated."""


class CompatibilityViolation(TodaError):
    """A differential form that must be closed is not."""


class SingularPoint(TodaError):
    """An ODE integration range touches a singular point."""


class StepFailure(TodaError):
    """An ODE integrator failed to advance."""


class SingularMatrix(TodaError):
    """A matrix that must be invertible is singular."""


class DivisionByZero(TodaError, ZeroDivisionError):
    """A spectral parameter that appears in a denominator is zero."""


class ConfigError(TodaError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Malformed configuration text."""

    def __init__(self, message: str, lines: tuple[int, ...] = ()):
        self.lines = tuple(lines)
        where = ", ".join(str(n) for n in self.lines)
        super().__init__(f"line {where}: {message}" if where else message)


class UnknownKey(ConfigError):
    """A configuration key that the schema does not define."""


class RangeError(ConfigError):
    """A configuration value outside its allowed range."""
