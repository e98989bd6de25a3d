"""Exception hierarchy shared by all modules."""


class BlowupError(Exception):
    """Base class for every error raised by this package."""


class OutOfDomain(BlowupError, ValueError):
    pass


class Inconclusive(BlowupError):
    """A limit ladder did not stabilize; carries the samples that were used."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class NotPowerType(BlowupError):
    pass


class NotExponentialType(BlowupError):
    pass


class InvalidSplit(BlowupError, ValueError):
    pass


class EmptyGrid(InvalidSplit):
    pass


class DivergentTail(BlowupError):
    pass


class QuadFailure(BlowupError):
    pass


class DivergentOffset(BlowupError):
    def __init__(self, message, regime=None):
        super().__init__(message)
        self.regime = regime


class NoRoot(BlowupError):
    pass


class DegenerateParameter(BlowupError, ValueError):
    pass


class NewtonDivergence(BlowupError):
    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class UnsupportedBalance(BlowupError):
    pass


class ContinuationStall(BlowupError):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class GridTooCoarse(BlowupError):
    pass


class MeshTooCoarse(BlowupError):
    pass


class DepthOutOfRange(BlowupError, ValueError):
    pass


class PoorFit(BlowupError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class HypothesisViolation(BlowupError, ValueError):
    pass
