"""Exception hierarchy shared by every module."""


class LabError(Exception):
    """Base class for all errors raised by madelung_lab."""


class ConfigurationError(LabError, ValueError):
    pass


class DegenerateDensityError(LabError, ValueError):
    pass


class NodeError(LabError):
    """A density (or |psi|^2) fell below the node threshold.

    ``index`` is the grid index of the offending point and ``step`` the time
    index, when the error was raised during an evolution.
    """

    def __init__(self, message, index=None, step=None):
        super().__init__(message)
        self.index = index
        self.step = step


class InstabilityError(LabError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ResolutionError(LabError, ValueError):
    pass


class AlignmentError(LabError, ValueError):
    pass


class InversionError(LabError, ValueError):
    pass


class ConsistencyError(LabError):
    pass


class UndefinedMeasureError(LabError, ValueError):
    pass


class DomainError(LabError, ValueError):
    pass


class PreconditionError(LabError, ValueError):
    pass
