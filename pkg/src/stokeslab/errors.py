"""Exception hierarchy shared by all modules."""


class StokesLabError(Exception):
    """Base class for every error raised by the package."""


class DegenerateParameter(StokesLabError):
    """A = -1 (double zero) or A = 0 (the pole at the origin disappears)."""


class OnCut(StokesLabError):
    pass


class AtBranchPoint(StokesLabError):
    pass


class PathTooCloseToSingularity(StokesLabError):
    pass


class StepCollapse(StokesLabError):
    pass


class MaxLengthExceeded(StokesLabError):
    pass


class NotFound(StokesLabError):
    """No short trajectory found; for valid A this signals a bug."""


class GraphInconsistent(StokesLabError):
    pass


class BoundaryCase(StokesLabError):
    def __init__(self, message, structure=None):
        super().__init__(message)
        self.structure = structure


class ArcThroughOrigin(StokesLabError):
    pass


class OutOfDomain(StokesLabError):
    pass


class ConstructionFailed(StokesLabError):
    pass


class NegativeDensity(StokesLabError):
    pass


class NoConvergence(StokesLabError):
    pass


class NoDescentProgress(StokesLabError):
    pass


class PrecisionExhausted(StokesLabError):
    pass


class NonConvergence(StokesLabError):
    pass


class TailNotDecaying(StokesLabError):
    pass


class ZeroArgument(StokesLabError):
    pass


class OutOfDisk(StokesLabError):
    pass


class RegimeMismatch(StokesLabError):
    pass
