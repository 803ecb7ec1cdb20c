"""Exception and warning types shared across the package."""


class NsLassoError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(NsLassoError):
    """Array shapes are inconsistent with each other or with the design."""


class ZeroColumn(NsLassoError):
    """A design column has (numerically) zero Euclidean norm."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"column {index} has numerically zero norm")


class NonPositiveLambda(NsLassoError):
    """A regularization level that must be positive was <= 0."""


class SingularSystem(NsLassoError):
    """The restricted normal equations could not be factorized."""


class SingularNewtonSystem(NsLassoError):
    """The dense generalized-Newton system is singular."""


class DegenerateResponse(NsLassoError):
    """X'y = 0, so the entire path collapses to beta = 0."""


class EmptyPath(NsLassoError):
    """A path with no points was passed to a selector."""


class InvalidRho(NsLassoError):
    """Correlation parameter outside the supported range."""


class InvalidDimensions(NsLassoError):
    """Problem dimensions outside the supported range."""


class InvalidT(NsLassoError):
    """Requested support size is not in [1, p]."""


class ZeroTruth(NsLassoError):
    """Ground-truth coefficient vector is identically zero."""


class CgStalledWarning(UserWarning):
    """Conjugate gradient hit its iteration cap before reaching tolerance."""


class NonConvergedWarning(UserWarning):
    """An iterative reference solver returned before reaching tolerance."""
