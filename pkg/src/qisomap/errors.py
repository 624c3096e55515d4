"""Exception hierarchy shared by every stage of the simulator."""


class QIsomapError(Exception):
    """Base class for all simulator errors."""


class LayoutMismatch(QIsomapError):
    pass


class FlagNotClean(QIsomapError):
    pass


class TargetNotClean(QIsomapError):
    pass


class DirtyAncilla(QIsomapError):
    """An ancilla or work register kept a nonzero value after uncomputation."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class OddValue(QIsomapError):
    pass


class AllZeroValues(QIsomapError):
    pass


class AsymmetricInput(QIsomapError):
    pass


class ConvergenceFailure(QIsomapError):
    pass


class InsufficientPositiveSpectrum(QIsomapError):
    pass


class SampleBudgetExceeded(QIsomapError):
    pass


class DegenerateSubspace(QIsomapError):
    pass


class ShotBudgetTooSmall(QIsomapError):
    pass


class InsufficientCopies(QIsomapError):
    pass


class UnknownGenerator(QIsomapError):
    pass


class Disconnected(QIsomapError):
    """Raised by the pipeline when the neighbourhood graph has several components."""


class DisconnectedWarning(UserWarning):
    pass
