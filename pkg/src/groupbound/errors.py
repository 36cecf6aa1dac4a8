"""Exception hierarchy shared by all modules."""


class GroupBoundError(Exception):
    """Base class for errors raised by groupbound."""


class InvalidArgument(GroupBoundError, ValueError):
    pass


class DimensionMismatch(GroupBoundError, ValueError):
    pass


class NumericalFailure(GroupBoundError, ArithmeticError):
    """The simplex iteration cap was exhausted or a factorization broke down."""


class InfeasibleSystem(GroupBoundError):
    """No coefficient vector reproduces the right-hand side exactly."""

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class NonConvergence(GroupBoundError, ArithmeticError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CalibrationDiverged(GroupBoundError):
    pass


class CalibrationMissing(GroupBoundError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UnknownSetting(GroupBoundError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class CovarianceNotPSD(GroupBoundError, ArithmeticError):
    pass
