"""Exception and warning types shared across the package."""


class ExteriorHeatError(Exception):
    """Base class for every hard error raised by the package."""


class InvalidSpec(ExteriorHeatError, ValueError):
    pass


class OutOfRange(ExteriorHeatError, ValueError):
    pass


class OutOfDomain(ExteriorHeatError, ValueError):
    pass


class MixedDirichlet(ExteriorHeatError, ValueError):
    pass


class MissingComponent(ExteriorHeatError, KeyError):
    pass


class InconsistentInputs(ExteriorHeatError, ValueError):
    pass


class GridMismatch(ExteriorHeatError, ValueError):
    pass


class SingularSystem(ExteriorHeatError, ArithmeticError):
    pass


class NotConverged(ExteriorHeatError, RuntimeError):
    """Iterative procedure stopped before reaching its tolerance.

    ``solution`` holds the best iterate and ``report`` the solver report
    (when the failing procedure is a linear solve).
    """

    def __init__(self, message, solution=None, report=None):
        super().__init__(message)
        self.solution = solution
        self.report = report


class MonotonicityViolation(ExteriorHeatError, RuntimeError):
    pass


class SupportOutsideWindow(ExteriorHeatError, ValueError):
    pass


class DegenerateWindow(ExteriorHeatError, ValueError):
    pass


class NoRoom(ExteriorHeatError, ValueError):
    def __init__(self, message, required_extent):
        super().__init__(message)
        self.required_extent = required_extent


class ConfigParse(ExteriorHeatError, ValueError):
    pass


class TruncationWarning(UserWarning):
    """The artificial outer boundary visibly influenced a result."""
