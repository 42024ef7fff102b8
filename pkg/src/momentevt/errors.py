"""Exception hierarchy.

Every error raised by the library derives from :class:`MomentEvtError`, which
is itself a :class:`ValueError`. Simulation records use the class name as the
error code.
"""


class MomentEvtError(ValueError):
    """Base class for all library errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# linear algebra
class NotSymmetric(MomentEvtError):
    pass


class NotPositiveDefinite(MomentEvtError):
    pass


class NoConvergence(MomentEvtError):
    pass


class DimensionMismatch(MomentEvtError):
    pass


class SingularTransform(MomentEvtError):
    pass


# univariate estimation
class NonPositiveObservation(MomentEvtError):
    def __init__(self, index: int, value: float):
        super().__init__(f"observation {index} is not strictly positive: {value!r}")
        self.index = index
        self.value = value


class TooFewObservations(MomentEvtError):
    pass


class InvalidK(MomentEvtError):
    pass


class DegenerateTail(MomentEvtError):
    pass


class InvalidQuery(MomentEvtError):
    pass


class InvalidArgument(MomentEvtError):
    pass


class InvalidSchedule(MomentEvtError):
    pass


# models
class InvalidParameter(MomentEvtError):
    pass


class ThresholdAtEndpoint(MomentEvtError):
    pass


class UnknownModel(MomentEvtError):
    pass


class DeterminantNotOne(MomentEvtError):
    pass


# regions
class SingularCovariance(MomentEvtError):
    pass


class InvalidP(MomentEvtError):
    pass


# simulation
class ConfigError(MomentEvtError):
    pass
