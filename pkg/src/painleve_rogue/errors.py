"""Exception hierarchy shared by every module.

The CLI maps the three top-level families onto exit codes: validation
failures exit with 2, numerical failures with 3 and I/O failures with 4.
"""


class RogueError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(RogueError, ValueError):
    """Bad parameters or malformed input data."""

    exit_code = 2


class NumericalError(RogueError, ArithmeticError):
    """A computation could not deliver a trustworthy result."""

    exit_code = 3


class DataIOError(RogueError, OSError):
    exit_code = 4


class IllConditionedError(NumericalError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class PrecisionExhaustedError(NumericalError):
    pass


class ResolutionError(NumericalError):
    """Laurent tail not decayed: the truncation order is too small."""

    def __init__(self, message, modes=None, tail=None):
        super().__init__(message)
        self.modes = modes
        self.tail = tail


class DivergenceError(NumericalError):
    def __init__(self, message, norm=None):
        super().__init__(message)
        self.norm = norm


class NoConvergenceError(NumericalError):
    pass


class StructureError(NumericalError):
    """Extracted coefficient violates the expected symmetry."""


class SingularPointError(NumericalError):
    def __init__(self, message, where=()):
        self.where = [float(w) for w in where]
        shown = ", ".join(f"{w:.6g}" for w in self.where[:8])
        more = " ..." if len(self.where) > 8 else ""
        super().__init__(f"{message} at [{shown}{more}]" if self.where else message)


class GeometryError(ValidationError):
    """Point or eigenvalue on the wrong side of (or too close to) a contour."""
