"""Exception hierarchy shared by all qfilab modules."""


class QfiLabError(Exception):
    """Base class for qfilab errors."""


class DimensionError(QfiLabError, ValueError):
    """Shapes or dimensions do not conform."""


class ParameterError(QfiLabError, ValueError):
    """A parameter is outside its admissible range."""


class NumericalError(QfiLabError, ArithmeticError):
    """A numerical routine failed a residual or positivity contract."""


class NoSLDError(QfiLabError, ValueError):
    """The derivative has support outside the state, so no SLD exists."""


class StationaryProbeError(QfiLabError, ValueError):
    """The probe state does not evolve under the generator."""


class InfeasibleCandidateError(QfiLabError, ValueError):
    """A candidate variable violates the feasibility constraint."""


class CapExceededError(QfiLabError, ValueError):
    """A dense construction would exceed a configured size cap."""


class ConditionError(QfiLabError, ValueError):
    """Preconditions of a theorem-based construction are not met."""
