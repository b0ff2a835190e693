"""Exception types raised across the package."""


class GmapError(Exception):
    """Base class for all package errors."""


class ScopeError(GmapError, ValueError):
    """A factor scope references an unknown or repeated variable."""


class ShapeError(GmapError, ValueError):
    """A factor table does not match the product of its scope cardinalities."""


class AssignmentError(GmapError, ValueError):
    """A full assignment has the wrong length or an out-of-range state."""


class NotReady(GmapError, RuntimeError):
    """A clique was asked to send before all of its other neighbours reported."""


class CorruptRecord(GmapError, RuntimeError):
    """A decision record needed for backtracking is missing."""


class MonotonicityError(GmapError, ValueError):
    """A combinator violated its non-decreasing-in-F contract."""


class BudgetExceeded(GmapError, RuntimeError):
    """Brute-force enumeration would exceed the configured state budget."""


class LengthError(GmapError, ValueError):
    """Ground truth and model disagree on sequence length."""


class ScaleError(GmapError, ValueError):
    """Weights cannot be represented as integers at the requested precision."""


class ParseError(GmapError, ValueError):
    """Malformed model file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
