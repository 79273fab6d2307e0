"""Exception types shared across the package."""


class PartialGCError(Exception):
    pass


class InvalidParameterError(PartialGCError, ValueError):
    pass


class ConstructionFailedError(PartialGCError, RuntimeError):
    pass


class UnsupportedAssignmentError(PartialGCError, ValueError):
    """Raised when an operation needs a square, regular assignment and did not get one."""


class InconsistentStateError(PartialGCError, ValueError):
    """Raised when a global state vector claims more processed chunks than a worker holds."""


class UndefinedConditionError(PartialGCError, ValueError):
    pass


class CoverageUnreachableError(PartialGCError, RuntimeError):
    """Raised when resampling failures could not make the target coverage reachable."""
