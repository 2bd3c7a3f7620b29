"""Exception hierarchy for covert_ic."""


class CovertICError(Exception):
    """Base class for all package errors."""


class AlphabetMismatch(CovertICError, ValueError):
    pass


class AbsoluteContinuityViolation(CovertICError, ValueError):
    pass


class SimplexViolation(CovertICError, ValueError):
    pass


class IndexOutOfRange(CovertICError, IndexError):
    pass


class EmptySubset(CovertICError, ValueError):
    pass


class AssumptionViolation(CovertICError):
    """A standing assumption of the model (absolute continuity, hull condition) fails."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateChiSquared(CovertICError):
    """chi^2(alpha) (or lambda(alpha)) vanishes, so the square-root law does not apply."""


class NoFeasibleAllocation(CovertICError):
    pass


class InfeasibleSchedule(CovertICError):
    pass


class ScaleGuardExceeded(CovertICError):
    """An exact or pointwise computation would exceed its hard cost guard."""

    def __init__(self, message, cost=None, limit=None):
        super().__init__(message)
        self.cost = cost
        self.limit = limit


class PowerCapExceeded(CovertICError):
    pass


class NumericalUnderflow(CovertICError):
    pass
