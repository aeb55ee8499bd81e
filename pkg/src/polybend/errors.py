"""Exception hierarchy."""


class PolybendError(Exception):
    """Base class for every error raised by the package."""


class ContractViolation(PolybendError, ValueError):
    """A documented precondition was not met (e.g. a non-unit rotation axis)."""


class PolygonError(PolybendError, ValueError):
    pass


class ClosingViolation(PolygonError):
    pass


class NonUnitEdge(PolygonError):
    pass


class TangencyViolation(PolygonError):
    pass


class InvalidIndex(PolybendError, IndexError):
    pass


class DiagonalError(PolybendError, ValueError):
    pass


class CrossingDiagonals(DiagonalError):
    pass


class WrongCount(DiagonalError):
    pass


class SideNotDiagonal(DiagonalError):
    pass


class ZeroDiagonal(PolybendError, ValueError):
    pass


class SingularPoint(PolybendError, ValueError):
    pass


class InfeasibleFiber(PolybendError, ValueError):
    """A triangle inequality of some adapted face is violated.

    ``face`` holds the offending vertex triple (1-based) when known.
    """

    def __init__(self, message: str, face: tuple[int, int, int] | None = None):
        super().__init__(message)
        self.face = face


class NotOnFiber(PolybendError, ValueError):
    pass


class FaceNotDegenerate(PolybendError, ValueError):
    pass


class NotInDenseSet(PolybendError, ValueError):
    pass


class DiagonalNotVanishing(PolybendError, ValueError):
    pass


class NotAFrame(PolybendError, ValueError):
    pass


class ImproperPolygon(PolybendError, ValueError):
    """A 2-frame maps to a polygon with vanishing sides."""

    def __init__(self, message: str, indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.indices = indices


class PartialSumNonzero(PolybendError, ValueError):
    pass


class DegenerateNormalization(PolybendError, ValueError):
    pass
