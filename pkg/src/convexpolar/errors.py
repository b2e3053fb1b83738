"""Exception hierarchy shared by all modules."""


class ConvexPolarError(Exception):
    """Base class for every error raised by convexpolar."""


class DimensionMismatch(ConvexPolarError, ValueError):
    pass


class IdealPoint(ConvexPolarError, ValueError):
    """A point at infinity (last homogeneous coordinate zero) where a finite one is required."""


class SingularMatrix(ConvexPolarError, ValueError):
    pass


class RankDeficient(ConvexPolarError):
    """The boundary frame (point plus tangents) of a sample is rank deficient."""


class NullSpaceAmbiguous(ConvexPolarError):
    """The incidence/tangency system has a null space of dimension > 1."""


class MissingGradients(ConvexPolarError, ValueError):
    pass


# singular alias used by the divergence functions
MissingGradient = MissingGradients


class NoConvergence(ConvexPolarError, RuntimeError):
    pass


class OutOfRange(ConvexPolarError, ValueError):
    """The target slope is not in the range of the gradient (bracketing failed)."""


class OutOfGrid(ConvexPolarError, ValueError):
    """Evaluation requested outside the sampled grid."""
