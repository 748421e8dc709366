"""Exception types shared across the package."""


class SolitonLabError(Exception):
    """Base class for all library errors."""


class NonPositiveArgument(SolitonLabError):
    """An argument that must be strictly positive was not."""


class DomainError(SolitonLabError):
    """Arguments outside the mathematical domain of the operation."""


class QuadratureNoConvergence(SolitonLabError):
    """An integral could not be resolved to the requested tolerance."""


class NonFiniteIntegrand(SolitonLabError):
    """The integrand returned NaN or infinity at a quadrature node."""


class DimensionUnsupported(SolitonLabError):
    """Chart dimension outside the supported range."""


class LengthMismatch(SolitonLabError):
    """Vector length does not match the expected ambient dimension."""


class DegenerateMetric(SolitonLabError):
    """Induced metric is numerically singular at the evaluation point."""


class BranchPoint(SolitonLabError):
    """Closed form requested at a point where it has a branch point."""


class BranchJump(SolitonLabError):
    """Angle unwrapping failed: the branch moved too far across a stencil."""


class TimeOrder(SolitonLabError):
    """Kernel evaluation requires t < t0."""


class AlphaNotOne(SolitonLabError):
    """Bound is only stated for unit translation speed."""


class NonPositive(SolitonLabError):
    """A quantity certified to be positive came out nonpositive."""
