"""Exception hierarchy shared by all modules.

Every error raised on purpose by the package derives from :class:`GGMError`.
The CLI maps :class:`ConfigError` to exit code 2 and :class:`NumericalError`
to exit code 3.
"""


class GGMError(Exception):
    """Base class for all package errors."""


class ConfigError(GGMError, ValueError):
    """Invalid model, parameter or input configuration."""


class DomainError(ConfigError):
    """Argument outside the domain of a function (e.g. k outside [0, pi])."""


class ShapeError(ConfigError):
    """Vectors or operators of incompatible dimension."""


class PreconditionError(ConfigError):
    """A documented precondition of an operation does not hold."""


class UnsupportedOffset(ConfigError, KeyError):
    """Custom transfer operator evaluated outside its table without a tail rule."""

    def __str__(self):
        return Exception.__str__(self)


class NumericalError(GGMError, ArithmeticError):
    """A numerical procedure failed to reach its target."""


class TruncationError(NumericalError):
    """A tail tolerance could not be met within the allowed cutoff."""


class StepSizeError(NumericalError):
    """A finite-difference step leaves the interior of the simplex."""


class SeedError(NumericalError):
    """A seed on the unstable chart is not an interior point."""


class BoundaryError(NumericalError):
    """An iterate drifted to the boundary of the simplex."""


class NoGapError(NumericalError):
    """The spectrum at the equidistribution admits no tau-gap."""

    def __init__(self, message, neutral_indices=()):
        super().__init__(message)
        self.neutral_indices = list(neutral_indices)


class DepthError(ConfigError):
    """A subtree or path reaches beyond the depth of a boundary law."""
