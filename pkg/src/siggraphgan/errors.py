"""Exception hierarchy used across the package.

The CLI maps these onto process exit codes: configuration problems exit 2,
data problems exit 3, numeric failures exit 4, checkpoint version mismatches
exit 5.
"""


class SigGraphGanError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SigGraphGanError):
    """Invalid configuration: unknown key, bad value, inconsistent options."""


class DataError(SigGraphGanError):
    """Input data violates a contract (missing file, malformed row, ...)."""


class DomainError(DataError):
    """A value lies outside the mathematical domain of an operation."""


class DegenerateInputError(DomainError):
    """Input is technically valid but degenerate (e.g. zero variance)."""


class SizeError(DataError):
    """A sequence is too short (or too long) for the requested operation."""


class OrderingError(DataError):
    """A sequence that must be strictly increasing is not."""


class ShapeError(SigGraphGanError):
    """Array shapes do not satisfy an operation's contract."""


class GraphError(SigGraphGanError):
    """An adjacency matrix is not a valid visibility-graph adjacency."""


class NumericError(SigGraphGanError):
    """A computation produced NaN/Inf or otherwise left the finite range."""


class SaturationError(NumericError):
    """An exponential overflowed; the offending inputs are reported."""


class ConvergenceError(SigGraphGanError):
    """An iterative fit exhausted its evaluation budget.

    The best parameters seen so far are attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CheckpointParseError(DataError):
    """A checkpoint file is corrupt; ``offset`` is the failing byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class CheckpointVersionError(SigGraphGanError):
    """A checkpoint was written by an incompatible format version."""
