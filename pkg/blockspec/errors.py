"""
Exception types raised by `blockspec`.

Every error derives from `BlockspecError` and from the built-in exception
that best describes it, so callers can catch either the specific kind or
the familiar built-in.
"""

__all__ = [
    "BlockspecError",
    "ConfigError",
    "EigensolverFailure",
    "IndexOutOfRange",
    "InvalidAlpha",
    "InvalidD",
    "InvalidG",
    "InvalidSolverParams",
    "InvalidStructure",
    "NoConvergence",
    "NonPositiveMatrix",
    "NotConverged",
    "ParseError",
    "SolverFailure",
    "ValidationError",
    "ZeroZOutsideSupport",
]


class BlockspecError(Exception):
    """Base class for all errors raised by this package."""


# --------------------------------------------------------------------------
# Model definition
# --------------------------------------------------------------------------


class InvalidStructure(BlockspecError, ValueError):
    """A `BlockStructure` violates one of its invariants."""


class InvalidAlpha(InvalidStructure):
    """Block fractions are not all positive or do not sum to one."""


class InvalidG(InvalidStructure):
    """The g matrix has a non-positive entry or the wrong shape."""


class InvalidD(InvalidStructure):
    """The structure has no blocks."""


class IndexOutOfRange(BlockspecError, IndexError):
    """A row index lies outside 1..N."""


class NonPositiveMatrix(BlockspecError, ValueError):
    """A matrix handed to the Perron-Frobenius solver has a non-positive entry."""


# --------------------------------------------------------------------------
# Iterative solvers
# --------------------------------------------------------------------------


class InvalidSolverParams(BlockspecError, ValueError):
    """`SolverParams` violates one of its invariants."""


class NoConvergence(BlockspecError, ArithmeticError):
    """An iteration hit its cap before meeting its tolerance."""

    iterations: int
    """Number of iterations performed before giving up."""

    last_iterate: object
    """The final iterate, for inspection."""

    t: float | None
    """The regularization level at which the failure happened, if any."""

    index: int | None
    """Position of the first failing row when a batch was being solved."""

    def __init__(
        self,
        message: str,
        *,
        iterations: int,
        last_iterate: object = None,
        t: float | None = None,
        index: int | None = None,
    ) -> None:
        super().__init__(message)
        self.iterations = iterations
        self.last_iterate = last_iterate
        self.t = t
        self.index = index


class NotConverged(BlockspecError, ValueError):
    """A quantity was requested from a solution that never converged."""


class ZeroZOutsideSupport(BlockspecError, ValueError):
    """b was requested at z = 0 from a solution classified as exterior."""


class SolverFailure(BlockspecError, ArithmeticError):
    """The fixed-point solver failed at one node of a radial grid."""

    node: int
    """Index of the failing node in the grid."""

    def __init__(self, message: str, *, node: int) -> None:
        super().__init__(message)
        self.node = node


class EigensolverFailure(BlockspecError, ArithmeticError):
    """The dense eigensolver did not return a spectrum."""


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


class ConfigError(BlockspecError, ValueError):
    """A run configuration could not be used."""


class ParseError(ConfigError):
    """The configuration document is not well-formed JSON."""

    line: int
    column: int

    def __init__(self, message: str, *, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    """A configuration field has an unacceptable value."""

    field: str
    """Dotted name of the offending field, e.g. `solver.damping`."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
