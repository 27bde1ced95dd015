"""Exception hierarchy shared by all modules."""


class WKBError(Exception):
    """Base class for every error raised by :mod:`wkbresum`."""


# jets
class DegenerateJet(WKBError, ZeroDivisionError):
    pass


class BranchPointProximity(WKBError):
    pass


class OrderUnderflow(WKBError):
    pass


# potentials
class InvalidParameters(WKBError, ValueError):
    pass


class SingularEvaluation(WKBError):
    pass


class NoBoundTurningPoints(WKBError):
    pass


class DegenerateTurningPoints(WKBError):
    pass


# contour
class ContourInfeasible(WKBError):
    pass


class QuadratureNoConverge(WKBError):
    pass


class BranchInconsistency(WKBError):
    pass


class OnContour(WKBError):
    pass


# resummed
class NodeTooCloseToTurningPoint(WKBError):
    pass


class KVanishes(WKBError):
    pass


class LevelNotBound(WKBError):
    pass


class NoConvergence(WKBError):
    pass


# oracle
class GridTooCoarse(WKBError):
    pass
