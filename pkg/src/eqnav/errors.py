"""Exception types shared across the library."""


class AngleNearPiError(ValueError):
    """Rotation logarithm requested within the guard band of angle pi."""


class ChartDomainError(ValueError):
    """State lies outside the domain of the local error chart."""


class KindMismatchError(ValueError):
    """Operands belong to different symmetry kinds or wrong payload shapes."""


class UnsupportedKindError(ValueError):
    """Operation is not defined for this symmetry kind."""


class SingularInnovationError(RuntimeError):
    """Innovation covariance too ill-conditioned to invert."""


class SingularCovarianceError(RuntimeError):
    """State covariance not invertible where a metric requires it."""
