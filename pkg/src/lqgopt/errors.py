"""Exception hierarchy for the lqgopt package.

Every domain failure raised by this package derives from :class:`LqgoptError`,
so callers (notably the CLI) can separate usage errors from numerical and
model-validity failures.
"""


class LqgoptError(Exception):
    """Base class for all lqgopt domain errors."""


class NotHurwitzError(LqgoptError):
    """A matrix required to be Hurwitz stable has spectral abscissa >= 0."""


class NumericalFailureError(LqgoptError):
    """A solver finished but its residual contract could not be met."""


class EigenFailureError(LqgoptError):
    """The underlying eigenvalue routine did not converge."""


class NoStabilizingSolutionError(LqgoptError):
    """The Riccati iteration produced no stabilizing solution."""


class NotPositiveDefiniteError(LqgoptError):
    """Cholesky factorization failed on a matrix required to be SPD."""


class PlacementFailureError(LqgoptError):
    """Pole placement failed to reach the requested spectrum."""


class DimensionMismatchError(LqgoptError):
    """Operands have incompatible shapes."""


class InvalidPlantError(LqgoptError):
    """Plant data violates one of the standing model assumptions."""


class NotStabilizingError(LqgoptError):
    """A controller required to stabilize the plant does not."""


class NotMinimalError(LqgoptError):
    """A controller required to be minimal is not."""


class SingularTransformError(LqgoptError):
    """A coordinate-change matrix is singular or numerically so."""


class MetricDegenerateError(LqgoptError):
    """The metric Gram matrix stayed indefinite after the jitter policy."""


class ZeroDirectionError(LqgoptError):
    """A nonzero tangent direction was required."""


class StepSizeUnderflowError(LqgoptError):
    """Backtracking exhausted its halving budget without acceptance."""


class InadmissibleStartError(LqgoptError):
    """An optimization run was started from an inadmissible controller."""


class InitFailureError(LqgoptError):
    """Random controller initialization exhausted its retry budget."""


class GenerationFailureError(LqgoptError):
    """Random plant generation exhausted its retry budget."""


class ConfigError(LqgoptError):
    """A run-configuration document is malformed or fails validation."""
