"""Exception hierarchy shared across the toolkit."""


class ReluForgeError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ReluForgeError):
    """Malformed interchange document or report file."""


class DimensionMismatchError(ReluForgeError):
    """Layer shapes, input vectors, or pattern shapes do not chain."""


class NonFiniteValueError(ReluForgeError):
    """A weight, bias, or bound is NaN or infinite."""


class NumericsError(ReluForgeError):
    """LP pivoting broke down (no acceptable pivot above tolerance)."""


class SizeLimitError(ReluForgeError):
    """Problem exceeds a documented size precondition."""


class MissingBoundsError(ReluForgeError):
    """Encoding requested for a unit whose prior-layer bounds are unknown."""


class IncompletePatternsError(ReluForgeError):
    """Operation needs a provably complete pattern set but got a partial one."""


class DeltaUnderflowError(ReluForgeError):
    """Penalty constant cannot be certified: minimal violation is below float noise."""


class ReportMismatchError(ReluForgeError):
    """A stability report does not belong to the given network/domain pair."""
