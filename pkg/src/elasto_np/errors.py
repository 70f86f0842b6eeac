"""Exception hierarchy shared by all modules."""


class ElastoNPError(Exception):
    """Base class for library errors."""


class OrderTooLarge(ElastoNPError):
    pass


class OrderTooSmall(ElastoNPError):
    pass


class NonFiniteInput(ElastoNPError):
    pass


class NonFiniteResult(ElastoNPError):
    pass


class ZeroArgument(ElastoNPError):
    pass


class InvalidOrder(ElastoNPError):
    pass


class DegreeTooLarge(ElastoNPError):
    pass


class DegenerateModuli(ElastoNPError):
    pass


class SideMismatch(ElastoNPError):
    pass


class TooCloseToSurface(ElastoNPError):
    pass


class DoubleDegenerate(ElastoNPError):
    pass


class SingularSystem(ElastoNPError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ModeMismatch(ElastoNPError):
    pass


class NoBracket(ElastoNPError):
    pass


class ResonanceNotAchieved(ElastoNPError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class TuningFailed(ElastoNPError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class SourceInsideShell(ElastoNPError):
    pass


class OnInterface(ElastoNPError):
    """Raised when a field point sits on an interface.

    ``limits`` holds the (inner, outer) one-sided values.
    """

    def __init__(self, message, limits=None):
        super().__init__(message)
        self.limits = limits


class ConfigInvalid(ElastoNPError):
    pass
