"""Exception hierarchy for the specclip toolkit."""


class SpecclipError(Exception):
    """Base class for all toolkit errors."""


class NonFiniteError(SpecclipError):
    """Input contains NaN or Inf entries."""


class ShapeMismatchError(SpecclipError):
    """Operands have incompatible shapes."""


class DimensionTooLargeError(SpecclipError):
    """Matrix exceeds the dense-SVD dimension limit."""


class ZeroMatrixError(SpecclipError):
    """Operation undefined on the zero matrix."""


class NoConvergenceError(SpecclipError):
    """Iterative method failed its convergence post-check."""


class DegenerateSpectrumError(SpecclipError):
    """Spectral gap too small for the requested diagnostic."""


class NonPositiveThresholdError(SpecclipError):
    """Clipping threshold must be strictly positive."""


class EmptyMatrixError(SpecclipError):
    """Matrix has no entries."""


class InvalidSpecError(SpecclipError):
    """Parameter specification violates its invariants."""


class RankTooLargeError(SpecclipError):
    """Requested rank exceeds what the dimensions allow."""


class ZeroNoiseError(SpecclipError):
    """Noise matrix is identically zero."""


class NonUnitVectorError(SpecclipError):
    """Direction vector is not normalized."""


class DegenerateProjectionError(SpecclipError):
    """Noise is exactly orthogonal to the singular direction pair."""


class LengthMismatchError(SpecclipError):
    """Paired sequences differ in length."""


class InsufficientSamplesError(SpecclipError):
    """Not enough usable samples for the estimator."""


class QuadratureFailureError(SpecclipError):
    """Adaptive quadrature did not reach the requested tolerance."""


class InvalidConstantsError(SpecclipError):
    """Problem constants violate the assumptions they must satisfy."""


class ThresholdBelowBoundError(SpecclipError):
    """Hard-clip threshold does not exceed the gradient magnitude bound."""


class MatrixFormatError(SpecclipError):
    """Matrix file is malformed."""
